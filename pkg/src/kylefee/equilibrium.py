"""Insider trading intensity: filter error, Kyle benchmark and the fixed point.

The optimal intensity solves

    beta_t = sigma_t^2 / (2 D_t) * (gamma_t - V_t (k_t^2 + 2 k_t A_t))

with ``D_t = int_t^T gamma_s^2 beta_s ds`` and
``A_t = int_t^T beta_s k_s^2 exp(-2 int_t^s k beta) ds``; the right-hand side is
iterated from the ``kappa = 0`` closed form until the defect is small.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import quadrature as quad
from .model_config import MarketParams, TimeGrid, fee_schedule

log = logging.getLogger(__name__)

__all__ = [
    "SolverError", "NegativeIntensityError", "DegenerateDenominatorError",
    "ConvergenceError", "GammaCurve", "IntensityProfile", "gamma_of_beta",
    "kyle_beta0", "fixed_point_rhs", "solve_equilibrium",
    "variational_residual",
]

DENOMINATOR_FLOOR = 1e-14


class SolverError(RuntimeError):
    pass


class NegativeIntensityError(SolverError):
    """The bracket of the fixed-point map is nonpositive somewhere: kappa too large."""


class DegenerateDenominatorError(SolverError):
    pass


class ConvergenceError(SolverError):
    def __init__(self, msg, profile=None):
        super().__init__(msg)
        self.profile = profile


@dataclass(frozen=True, eq=False)
class GammaCurve:
    """Filter mean-square error ``E(v - m_t)^2`` on the grid."""

    gamma: np.ndarray
    gamma0: float

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.gamma, dtype=dtype)


@dataclass(frozen=True, eq=False)
class IntensityProfile:
    beta: np.ndarray
    kappa: float
    grid: TimeGrid
    residual: float = 0.0
    iterations: int = 0
    status: str = "converged"
    history: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if np.any(~(self.beta > 0)):
            raise NegativeIntensityError("intensity must be positive at every node")

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.beta, dtype=dtype)


def _beta_array(beta, grid) -> np.ndarray:
    b = np.asarray(getattr(beta, "beta", beta), dtype=float)
    if b.shape != grid.nodes.shape:
        raise ValueError(f"beta has shape {b.shape}, grid has {grid.nodes.shape}")
    return b


def gamma_of_beta(beta, params: MarketParams, grid: TimeGrid) -> GammaCurve:
    """Closed-form Riccati solution ``sv^2 / (1 + sv^2 int_0^t (beta/sigma)^2)``."""
    b = _beta_array(beta, grid)
    if np.any(b < 0):
        raise ValueError("beta must be nonnegative")
    s = params.sigma_at(grid.nodes)
    g0 = params.gamma0
    info = quad.cumulative((b / s) ** 2, grid)
    return GammaCurve(gamma=g0 / (1.0 + g0 * info), gamma0=g0)


def kyle_beta0(params: MarketParams, grid: TimeGrid) -> IntensityProfile:
    """Benchmark intensity without fees.

    ``beta0_t = sigma_t^2 sqrt(int_0^T sigma^2) / (sigma_v int_t^T sigma^2)``,
    i.e. ``sigma sqrt(T) / (sigma_v (T - t))`` for constant sigma.
    """
    t = grid.nodes
    T = params.horizon
    s2 = params.sigma_at(t) ** 2
    if params.constant_sigma:
        remaining = s2 * (T - t)
        total = s2[0] * T
    else:
        # node values plus a fine quadrature of the stretch beyond the grid
        tt = np.linspace(grid.end, T, 65)
        beyond = np.trapezoid(params.sigma_at(tt) ** 2, tt)
        c = quad.cumulative(s2, grid)
        remaining = c[-1] - c + beyond
        total = c[-1] + beyond
    beta = s2 * np.sqrt(total) / (params.sigma_v * remaining)
    return IntensityProfile(beta=beta, kappa=0.0, grid=grid, status="closed_form")


@dataclass(frozen=True, eq=False)
class _RhsParts:
    gamma: np.ndarray
    variance: np.ndarray
    denominator: np.ndarray
    fee_term: np.ndarray
    bracket: np.ndarray
    rhs: np.ndarray


def _rhs_parts(b, params, grid) -> _RhsParts:
    from .moments import order_flow_moments

    s2 = params.sigma_at(grid.nodes) ** 2
    k = fee_schedule(params, grid)
    g = gamma_of_beta(b, params, grid).gamma
    mom = order_flow_moments(b, params, grid)
    V = mom.variance
    logK = mom.log_e
    D = quad.to_horizon(g * g * b, grid, order=1)
    # A_t = e^{2K_t} int_t^T beta k^2 e^{-2K_s} ds, shifted by K_end for range
    kend = logK[-1]
    f = b * k * k * np.exp(-2.0 * (logK - kend))
    A = np.exp(2.0 * (logK - kend)) * quad.to_horizon(f, grid, order=1)
    bracket = g - V * (k * k + 2.0 * k * A)
    with np.errstate(divide="ignore", invalid="ignore"):
        rhs = s2 * bracket / (2.0 * D)
    return _RhsParts(g, V, D, A, bracket, rhs)


def fixed_point_rhs(beta, params: MarketParams, grid: TimeGrid) -> np.ndarray:
    """Right-hand side of the intensity equation evaluated at ``beta``."""
    b = _beta_array(beta, grid)
    if np.any(~(b > 0)):
        raise ValueError("beta must be positive at every node")
    parts = _rhs_parts(b, params, grid)
    if np.any(parts.denominator < DENOMINATOR_FLOOR):
        i = int(np.argmin(parts.denominator))
        raise DegenerateDenominatorError(
            f"int_t^T gamma^2 beta = {parts.denominator[i]:.3g} at t={grid.nodes[i]:.4g}")
    if np.any(~(parts.bracket > 0)):
        i = int(np.argmin(parts.bracket))
        raise NegativeIntensityError(
            f"negative intensity: bracket {parts.bracket[i]:.3g} at t={grid.nodes[i]:.4g}"
            f" for kappa={params.kappa}")
    return parts.rhs


def solve_equilibrium(params: MarketParams, grid: TimeGrid, tolerance: float = 1e-8,
                      max_iter: int = 500, damping: float = 0.5,
                      iter_limit: int | None = None) -> IntensityProfile:
    """Fixed point of :func:`fixed_point_rhs` started from the Kyle benchmark.

    With ``iter_limit=n`` exactly ``n`` plain substitution rounds are made
    (no damping, no tolerance test), which is the short procedure used for
    quick figures; the returned residual is the defect at the last iterate.
    Otherwise the damped iteration ``(1-d) beta + d rhs(beta)`` runs until the
    sup-norm defect is ``<= tolerance``; ``d`` is halved whenever the defect
    oscillates, i.e. when successive defect vectors point in opposite
    directions.
    """
    beta0 = kyle_beta0(params, grid)
    if params.kappa == 0.0:
        return beta0
    if not 0.0 < damping <= 1.0:
        raise ValueError("damping must lie in (0, 1]")

    b = beta0.beta
    history = []
    if iter_limit is not None:
        if iter_limit < 0:
            raise ValueError("iter_limit must be nonnegative")
        for _ in range(iter_limit):
            b = fixed_point_rhs(b, params, grid)
            if np.any(~(b > 0)):
                raise NegativeIntensityError(f"iterate left the positive cone for kappa={params.kappa}")
        res = float(np.max(np.abs(fixed_point_rhs(b, params, grid) - b)))
        return IntensityProfile(beta=b, kappa=params.kappa, grid=grid, residual=res,
                                iterations=iter_limit, status="iter_limit",
                                history=(res,))

    d = damping
    prev = None
    for n in range(max_iter + 1):
        r = fixed_point_rhs(b, params, grid)
        defect = r - b
        res = float(np.max(np.abs(defect)))
        history.append(res)
        if res <= tolerance:
            return IntensityProfile(beta=b, kappa=params.kappa, grid=grid, residual=res,
                                    iterations=n, status="converged", history=tuple(history))
        if n == max_iter:
            break
        if prev is not None and np.dot(defect, prev) < 0 and res >= history[-2]:
            d *= 0.5
            log.debug("defect oscillates at iteration %d, damping -> %g", n, d)
        prev = defect
        b = (1.0 - d) * b + d * r
    prof = IntensityProfile(beta=b, kappa=params.kappa, grid=grid, residual=res,
                            iterations=max_iter, status="max_iter", history=tuple(history))
    raise ConvergenceError(
        f"no convergence after {max_iter} iterations (defect {res:.3g}, kappa={params.kappa})",
        profile=prof)


def variational_residual(beta, params: MarketParams, grid: TimeGrid,
                         tests=None) -> np.ndarray:
    """Weak-form residual of the first-order condition behind the fixed point.

    The pointwise condition is assembled from four separately evaluated
    integrals,

        gamma_t - 2 beta_t/sigma_t^2 int_t^T gamma^2 beta
          - k_t^2 V_t
          - 2 k_t int_t^T beta_s k_s^2 e^{-2K_s} W_s ds
          + 2 k_t int_t^T beta_s k_s^2 e^{-2K_s} (W_s - W_t) ds,

    with ``K = int_0 k beta`` and ``W = int_0 sigma^2 e^{2K}``; the inner
    integrals are computed node by node rather than through the
    factorisation used by :func:`fixed_point_rhs`.  The result is tested
    against piecewise-linear hat functions on the grid (all interior nodes
    unless ``tests`` gives node indices).
    """
    b = _beta_array(beta, grid)
    t = grid.nodes
    n = t.size
    s2 = params.sigma_at(t) ** 2
    k = fee_schedule(params, grid)
    g = gamma_of_beta(b, params, grid).gamma
    K = quad.cumulative(k * b, grid)
    W = quad.cumulative(s2 * np.exp(2.0 * K), grid)
    V = np.exp(-2.0 * K) * W

    eps = grid.terminal_margin
    first = np.empty(n)
    third = np.empty(n)
    fourth = np.empty(n)
    gg_b = g * g * b
    h = b * k * k * np.exp(-2.0 * K)
    for i in range(n):
        m = n - i
        if m >= 3:
            sub = _SubGrid(t[i:], grid.rule)
            first[i] = sub.integrate(gg_b[i:])
            third[i] = sub.integrate(h[i:] * W[i:])
            fourth[i] = sub.integrate(h[i:] * (W[i:] - W[i]))
        elif m == 2:
            dt = t[-1] - t[-2]
            first[i] = 0.5 * dt * (gg_b[-2] + gg_b[-1])
            third[i] = 0.5 * dt * (h[-2] * W[-2] + h[-1] * W[-1])
            fourth[i] = 0.5 * dt * h[-1] * (W[-1] - W[-2])
        else:
            first[i] = third[i] = fourth[i] = 0.0
        first[i] += quad.tail(gg_b[-1], eps, 1)
        third[i] += quad.tail(h[-1] * W[-1], eps, 1)
        fourth[i] += quad.tail(h[-1] * (W[-1] - W[i]), eps, 1)

    pointwise = (g - 2.0 * b / s2 * first - k * k * V
                 - 2.0 * k * third + 2.0 * k * fourth)
    return _hat_projection(pointwise, t, tests)


class _SubGrid:
    def __init__(self, nodes, rule):
        self.nodes = nodes
        self.rule = rule

    def integrate(self, f):
        return quad.cumulative(f, self)[-1]


def _hat_projection(f, t, tests):
    """``int f(t) phi_j(t) dt`` for hat functions, ``f`` linear between nodes."""
    idx = np.arange(1, t.size - 1) if tests is None else np.asarray(tests)
    if np.any((idx < 1) | (idx > t.size - 2)):
        raise ValueError("hat functions are centred on interior nodes")
    hl = t[idx] - t[idx - 1]
    hr = t[idx + 1] - t[idx]
    return (hl * (f[idx - 1] + 2.0 * f[idx]) + hr * (2.0 * f[idx] + f[idx + 1])) / 6.0
