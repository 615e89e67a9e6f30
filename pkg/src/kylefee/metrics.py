"""Regulator and informativeness metrics.

* ``rv(t, kappa) = sqrt(S_t(beta) / gamma_t(beta0))`` with
  ``S_t = gamma_t + k_t^2 V_t``, the relative volatility a regulator sees;
* the inverse map ``rv* -> kappa*`` solving ``sup_t rv(t, kappa*) = rv*``;
* price informativeness ``iota = corr(v, p_t)^2`` and the pieces it is built
  from.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .equilibrium import IntensityProfile, gamma_of_beta, kyle_beta0, solve_equilibrium
from .model_config import MarketParams, TimeGrid, fee_schedule
from .moments import order_flow_moments
from . import quadrature as quad

log = logging.getLogger(__name__)

# quadrature error of the correlations near the horizon is ~4e-6 at N=500
RHO_SLACK = 1e-5


class TargetUnreachableError(RuntimeError):
    pass


class NonMonotoneBracketError(RuntimeError):
    pass


class InconsistentCorrelationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MetricCurves:
    t: np.ndarray
    kappa: float
    rv: np.ndarray
    iota: np.ndarray
    rho_vp: np.ndarray
    rho_my: np.ndarray
    var_p: np.ndarray
    var_m: np.ndarray
    gamma: np.ndarray

    def at(self, name: str, t):
        return np.interp(t, self.t, getattr(self, name))


def _kappa_of(beta, params):
    kb = getattr(beta, "kappa", None)
    if kb is not None and not np.isclose(kb, params.kappa, rtol=0, atol=1e-15):
        raise ValueError(f"profile solved for kappa={kb}, params have kappa={params.kappa}")


def relative_volatility(beta_k, beta_0, params: MarketParams, grid: TimeGrid) -> np.ndarray:
    """``rv(t, kappa) = sqrt(gamma(beta)/gamma(beta0) + k^2 V / gamma(beta0))``."""
    _kappa_of(beta_k, params)
    if getattr(beta_0, "kappa", 0.0) != 0.0:
        raise ValueError("benchmark profile must be the kappa = 0 intensity")
    g = gamma_of_beta(beta_k, params, grid).gamma
    g0 = gamma_of_beta(beta_0, params, grid).gamma
    k = fee_schedule(params, grid)
    V = order_flow_moments(beta_k, params, grid).variance
    return np.sqrt(g / g0 + k * k * V / g0)


def sup_relative_volatility(params: MarketParams, grid: TimeGrid, **solver_opts) -> tuple:
    """``(max_t rv(t, kappa), profile)`` for the equilibrium at ``params.kappa``."""
    prof = solve_equilibrium(params, grid, **solver_opts)
    rv = relative_volatility(prof, kyle_beta0(params, grid), params, grid)
    return float(rv.max()), prof


@dataclass(frozen=True, eq=False)
class RegulatorSolution:
    kappa: float
    sup_rv: float
    rv_star: float
    profile: IntensityProfile
    evaluations: int


def regulator_inverse_map(rv_star: float, params: MarketParams, grid: TimeGrid,
                          kappa_max: float = 0.1, tol: float = 1e-6,
                          max_bisections: int = 200, **solver_opts) -> RegulatorSolution:
    """Fee slope at which the largest relative volatility equals ``rv_star``.

    Bisection on ``[0, kappa_max]``; each evaluation re-solves the
    equilibrium with ``solver_opts``.  The bracket is re-checked at every
    step and a midpoint value outside it raises
    :class:`NonMonotoneBracketError`.
    """
    if not rv_star > 1.0:
        raise ValueError(f"rv_star must exceed 1, got {rv_star}")

    def f(kappa):
        return sup_relative_volatility(params.with_kappa(kappa), grid, **solver_opts)

    lo, f_lo = 0.0, 1.0
    hi = float(kappa_max)
    f_hi, prof_hi = f(hi)
    evals = 1
    if f_hi < rv_star:
        raise TargetUnreachableError(
            f"sup_t rv at kappa_max={hi} is {f_hi:.6f} < target {rv_star}")
    if abs(f_hi - rv_star) <= tol:
        return RegulatorSolution(hi, f_hi, rv_star, prof_hi, evals)

    for _ in range(max_bisections):
        mid = 0.5 * (lo + hi)
        f_mid, prof = f(mid)
        evals += 1
        if not (f_lo - tol <= f_mid <= f_hi + tol):
            raise NonMonotoneBracketError(
                f"sup rv not monotone: rv({lo:.6g})={f_lo:.6f}, rv({mid:.6g})={f_mid:.6f},"
                f" rv({hi:.6g})={f_hi:.6f}")
        if abs(f_mid - rv_star) <= tol:
            return RegulatorSolution(mid, f_mid, rv_star, prof, evals)
        if f_mid < rv_star:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    raise TargetUnreachableError(
        f"bisection stalled at kappa in [{lo}, {hi}] without reaching |rv - {rv_star}| <= {tol}")


def order_flow_value_covariance(beta, params: MarketParams, grid: TimeGrid) -> np.ndarray:
    """``cov(v, y_t) = cov(m_t, y_t) = int_0^t beta gamma e^{-(K_t - K_s)} ds``."""
    b = np.asarray(getattr(beta, "beta", beta), dtype=float)
    g = gamma_of_beta(b, params, grid).gamma
    K = order_flow_moments(b, params, grid).log_e
    kend = K[-1]
    return np.exp(-(K - kend)) * quad.cumulative(b * g * np.exp(K - kend), grid)


def informativeness(beta, params: MarketParams, grid: TimeGrid,
                    rho_method: str = "exact", rho_slack: float = RHO_SLACK) -> MetricCurves:
    """Correlations, price variances and ``iota = corr(v, p_t)^2``.

    ``rho_method`` selects how ``cov(m_t, y_t)`` is obtained: ``"exact"``
    integrates its ODE, ``"projection"`` uses the shortcut
    ``rho_my = beta gamma sigma_y / (sigma^2 sigma_m)``.  The two agree when
    ``kappa = 0``.  At ``t = 0`` both correlations are 0/0 and take the value
    of the first interior node.  A correlation further than ``rho_slack``
    outside ``[-1, 1]`` raises; values are never clipped.
    """
    _kappa_of(beta, params)
    b = np.asarray(getattr(beta, "beta", beta), dtype=float)
    t = grid.nodes
    sv2 = params.gamma0
    g = gamma_of_beta(b, params, grid).gamma
    V = order_flow_moments(b, params, grid).variance
    k = fee_schedule(params, grid)
    s2 = params.sigma_at(t) ** 2
    var_m = sv2 - g
    sd_m = np.sqrt(np.maximum(var_m, 0.0))
    sd_y = np.sqrt(V)

    with np.errstate(divide="ignore", invalid="ignore"):
        if rho_method == "exact":
            cov_my = order_flow_value_covariance(b, params, grid)
            rho_my = cov_my / (sd_m * sd_y)
        elif rho_method == "projection":
            rho_my = b * g * sd_y / (s2 * sd_m)
            cov_my = rho_my * sd_m * sd_y
        else:
            raise ValueError(f"unknown rho_method {rho_method!r}")
        cov_my = np.where(V > 0, cov_my, 0.0)
        var_p = var_m + k * k * V + 2.0 * k * cov_my
        rho_vp = (var_m + k * cov_my) / (params.sigma_v * np.sqrt(var_p))

    for rho in (rho_my, rho_vp):
        rho[0] = rho[1]
    for name, rho in (("rho_my", rho_my), ("rho_vp", rho_vp)):
        bad = np.abs(rho) > 1.0 + rho_slack
        if np.any(bad) or np.any(~np.isfinite(rho)):
            i = int(np.argmax(bad | ~np.isfinite(rho)))
            raise InconsistentCorrelationError(f"{name}={rho[i]} at t={t[i]:.4g}")

    rv = relative_volatility(b, kyle_beta0(params, grid), params, grid)
    return MetricCurves(t=t, kappa=params.kappa, rv=rv, iota=rho_vp ** 2, rho_vp=rho_vp,
                        rho_my=rho_my, var_p=var_p, var_m=var_m, gamma=g)


def terminal_limits(params: MarketParams) -> dict:
    """Values at the horizon, where gamma_T = 0 and k_T = 0."""
    sv2 = params.gamma0
    return {"rv": 1.0, "iota": 1.0, "rho_vp": 1.0, "rho_my": 1.0,
            "var_p": sv2, "var_m": sv2, "gamma": 0.0}
