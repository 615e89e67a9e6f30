"""Expected profits of the insider, the market maker and the noise traders."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import quadrature as quad
from .equilibrium import gamma_of_beta
from .model_config import MarketParams, TimeGrid, fee_schedule
from .moments import order_flow_moments


@dataclass(frozen=True, eq=False)
class ProfitCurves:
    """Net expected profits on the grid (initial wealth subtracted)."""

    t: np.ndarray
    insider: np.ndarray
    market_maker: np.ndarray
    noise: np.ndarray
    kappa: float

    def gross(self, params: MarketParams) -> dict:
        return {
            "insider": self.insider + params.w0_insider,
            "market_maker": self.market_maker + params.w0_mm,
            "noise": self.noise + params.w0_noise,
        }


def _prepare(beta, params, grid):
    b = np.asarray(getattr(beta, "beta", beta), dtype=float)
    g = gamma_of_beta(b, params, grid).gamma
    mom = order_flow_moments(b, params, grid)
    return b, g, mom, fee_schedule(params, grid)


def insider_profit_terminal(beta, params: MarketParams, grid: TimeGrid) -> float:
    """``J^I - w0 = int_0^T beta (gamma + k^2 V) dt``.

    The stretch beyond the last node uses the horizon asymptotics:
    ``beta*gamma`` tends to a constant and ``beta k^2 V`` vanishes linearly.
    """
    b, g, mom, k = _prepare(beta, params, grid)
    a = b * g
    c = b * k * k * mom.variance
    eps = grid.terminal_margin
    return float(quad.definite(a + c, grid) + quad.tail(a[-1], eps, 0) + quad.tail(c[-1], eps, 1))


def _insider_parts(b, g, mom, k, params, grid):
    """The four pieces of E w_t^I - w0 (each a curve on the grid)."""
    K = mom.log_e
    V = mom.variance
    s2 = params.sigma_at(grid.nodes) ** 2
    kend = K[-1]
    direct = quad.cumulative(b * (g + k * k * V), grid)
    filt = g * quad.cumulative(b, grid)
    # E[(v - m_s) y_t] = int_s^t beta gamma e^{-(K_t - K_r)} dr for s <= t
    G = quad.cumulative(b * g * np.exp(K - kend), grid)
    drift = k * np.exp(-(K - kend)) * (G * quad.cumulative(b, grid) - quad.cumulative(b * G, grid))
    # k_t int_0^t k_s beta_s C(t, s) ds,  C(t,s) = e^{-K_t} e^{-K_s} W_s
    W = quad.cumulative(s2 * np.exp(2.0 * (K - kend)), grid)
    cov = k * np.exp(-(K - kend)) * quad.cumulative(np.exp(-(K - kend)) * W * k * b, grid)
    return direct, filt, drift, cov


def insider_profit_curve(beta, params: MarketParams, grid: TimeGrid) -> np.ndarray:
    """Net expected insider wealth ``E w_t^I - w0`` through time t.

    ``int_0^t beta_s E[(v - p_s)(p_t - p_s)] ds`` expanded into
    ``int beta (gamma + k^2 V) - gamma_t int beta + k_t int beta_s f(t,s) ds
    - k_t int k_s beta_s C(t,s) ds`` where ``f(t,s) = E[(v - m_s) y_t]``.
    """
    b, g, mom, k = _prepare(beta, params, grid)
    direct, filt, drift, cov = _insider_parts(b, g, mom, k, params, grid)
    return direct - filt + drift - cov


def market_maker_profit_curve(beta, params: MarketParams, grid: TimeGrid) -> np.ndarray:
    """``E w_t^M - w0 = int_0^t (k^2 V beta + kappa V) ds``."""
    b, _, mom, k = _prepare(beta, params, grid)
    return quad.cumulative(market_maker_integrand(b, params, grid, mom.variance), grid)


def market_maker_integrand(beta, params, grid, variance=None) -> np.ndarray:
    b = np.asarray(getattr(beta, "beta", beta), dtype=float)
    if variance is None:
        variance = order_flow_moments(b, params, grid).variance
    k = fee_schedule(params, grid)
    return k * k * variance * b + params.kappa * variance


def market_maker_profit_terminal(beta, params: MarketParams, grid: TimeGrid) -> float:
    b = np.asarray(getattr(beta, "beta", beta), dtype=float)
    V = order_flow_moments(b, params, grid).variance
    f = market_maker_integrand(b, params, grid, V)
    eps = grid.terminal_margin
    fee_part = params.kappa * V[-1]
    return float(quad.definite(f, grid) + quad.tail(fee_part, eps, 0)
                 + quad.tail(f[-1] - fee_part, eps, 1))


def noise_trader_profit_curve(insider, mm) -> np.ndarray:
    """Noise traders lose what the other two gain: ``-(p_I + p_M)``."""
    insider = np.asarray(insider, dtype=float)
    mm = np.asarray(mm, dtype=float)
    if insider.shape != mm.shape:
        raise ValueError(f"curve shapes differ: {insider.shape} vs {mm.shape}")
    return -(insider + mm)


def profit_curves(beta, params: MarketParams, grid: TimeGrid) -> ProfitCurves:
    pi = insider_profit_curve(beta, params, grid)
    pm = market_maker_profit_curve(beta, params, grid)
    return ProfitCurves(t=grid.nodes, insider=pi, market_maker=pm,
                        noise=noise_trader_profit_curve(pi, pm), kappa=params.kappa)
