"""Running integrals on a :class:`TimeGrid` and the terminal-tail rule.

Every curve in the package is built from these three primitives so that the
same discretisation is used throughout.
"""

import numpy as np
from scipy.integrate import cumulative_simpson, cumulative_trapezoid


def cumulative(f, grid) -> np.ndarray:
    """``F(t_i) = int_0^{t_i} f`` with ``F(0) = 0``."""
    f = np.asarray(f, dtype=float)
    if grid.rule == "trapezoid":
        return cumulative_trapezoid(f, grid.nodes, initial=0.0)
    return cumulative_simpson(f, x=grid.nodes, initial=0.0)


def tail(last_value, margin: float, order: int):
    """Integral over ``[T - margin, T]`` of ``f_last * ((T - s) / margin) ** order``.

    ``order`` is the rate at which the integrand vanishes at the horizon in
    the Kyle regime (gamma ~ T - t, beta ~ 1 / (T - t)): 0 for ``beta*gamma``,
    1 for ``gamma**2 * beta`` or ``beta * k**2``.
    """
    return np.asarray(last_value) * margin / (order + 1.0)


def to_horizon(f, grid, order: int) -> np.ndarray:
    """``int_{t_i}^T f`` for every node, the part beyond the grid by :func:`tail`."""
    c = cumulative(f, grid)
    return (c[-1] - c) + tail(np.asarray(f)[-1], grid.terminal_margin, order)


def definite(f, grid) -> float:
    """``int_0^{T - margin} f`` with the grid weights."""
    return float(np.dot(grid.weights, f))
