"""Mean, variance and covariance of the aggregate order flow y."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import quadrature as quad
from .model_config import MarketParams, TimeGrid, fee_schedule


@dataclass(frozen=True, eq=False)
class MomentSet:
    """Order-flow moments for one (k, beta) pair.

    ``log_e`` is ``int_0^t k beta`` so that ``e_factor = exp(log_e)``;
    ``variance`` is ``V(t) = E y_t^2`` and ``mean`` is ``E y_t`` for the
    initial order ``y0``.
    """

    grid: TimeGrid
    log_e: np.ndarray
    variance: np.ndarray
    mean: np.ndarray

    @property
    def e_factor(self) -> np.ndarray:
        return np.exp(self.log_e)

    def covariance(self, s: float, t: float) -> float:
        return _covariance(self, s, t)

    def covariance_matrix(self, idx=None) -> np.ndarray:
        """``C(t_i, t_j)`` on the node subset ``idx`` (all nodes by default)."""
        idx = np.arange(len(self.grid)) if idx is None else np.asarray(idx)
        lo = np.minimum.outer(idx, idx)
        hi = np.maximum.outer(idx, idx)
        return self.variance[lo] * np.exp(self.log_e[lo] - self.log_e[hi])


def order_flow_moments(beta, params: MarketParams, grid: TimeGrid,
                       y0: float = 0.0) -> MomentSet:
    b = np.asarray(getattr(beta, "beta", beta), dtype=float)
    k = fee_schedule(params, grid)
    K = quad.cumulative(k * b, grid)
    s2 = params.sigma_at(grid.nodes) ** 2
    # e^{-2K_t} int_0^t s^2 e^{2K_u} du, written with K_u - K_t <= 0
    kend = K[-1]
    inner = quad.cumulative(s2 * np.exp(2.0 * (K - kend)), grid)
    V = np.exp(-2.0 * (K - kend)) * inner
    V[0] = 0.0
    return MomentSet(grid=grid, log_e=K, variance=V, mean=y0 * np.exp(-K))


def order_flow_variance(beta, params, grid) -> np.ndarray:
    """``V(t) = e^{-2 int_0^t k beta} int_0^t sigma_u^2 e^{2 int_0^u k beta} du``."""
    return order_flow_moments(beta, params, grid).variance


def order_flow_mean(beta, params, grid, y0: float = 0.0) -> np.ndarray:
    """``E y_t = y0 exp(-int_0^t k beta)``."""
    return order_flow_moments(beta, params, grid, y0).mean


def order_flow_covariance(beta, params, grid, s: float, t: float) -> float:
    """``E y_s y_t = V(min) e(min) / e(max)``."""
    return _covariance(order_flow_moments(beta, params, grid), s, t)


def _covariance(mom: MomentSet, s: float, t: float) -> float:
    grid = mom.grid
    for x in (s, t):
        if not (0.0 <= x <= grid.end + 1e-12 * grid.horizon):
            raise ValueError(f"time {x} outside grid range [0, {grid.end}]")
    lo, hi = min(s, t), max(s, t)
    v = np.interp(lo, grid.nodes, mom.variance)
    dlog = np.interp(lo, grid.nodes, mom.log_e) - np.interp(hi, grid.nodes, mom.log_e)
    return float(v * np.exp(dlog))
