"""Market parameters, time grids and the flat ``key = value`` config format."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Union

import numpy as np
from scipy.integrate import cumulative_simpson

SigmaLike = Union[float, Callable[[np.ndarray], np.ndarray]]


class ConfigError(ValueError):
    """Invalid model parameters, grid options or config file contents."""


@dataclass(frozen=True)
class MarketParams:
    """Exogenous constants of the market.

    ``sigma`` is the noise-trade volatility rate; either a positive constant
    or a vectorised callable ``sigma(t)``.  The fee schedule is
    ``k_t = kappa * (horizon - t)``.
    """

    mu_v: float = 0.0
    sigma_v: float = 0.30
    sigma: SigmaLike = 0.20
    horizon: float = 10.0
    kappa: float = 0.0
    w0_insider: float = 0.0
    w0_mm: float = 0.0
    w0_noise: float = 0.0

    def __post_init__(self):
        if not (self.sigma_v > 0 and math.isfinite(self.sigma_v)):
            raise ConfigError(f"sigma_v must be positive, got {self.sigma_v}")
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise ConfigError(f"horizon must be positive, got {self.horizon}")
        if not (self.kappa >= 0 and math.isfinite(self.kappa)):
            raise ConfigError(f"kappa must be nonnegative, got {self.kappa}")
        if not callable(self.sigma) and not self.sigma > 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")

    @property
    def constant_sigma(self) -> bool:
        return not callable(self.sigma)

    @property
    def gamma0(self) -> float:
        return self.sigma_v ** 2

    def sigma_at(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if callable(self.sigma):
            s = np.broadcast_to(np.asarray(self.sigma(t), dtype=float), t.shape)
            if np.any(~(s > 0)):
                raise ConfigError("sigma(t) must be positive at every grid node")
            return np.array(s)
        return np.full(t.shape, float(self.sigma))

    def with_kappa(self, kappa: float) -> "MarketParams":
        return replace(self, kappa=float(kappa))


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Uniform nodes on ``[0, T - margin]`` with matching quadrature weights.

    ``rule`` selects the running-integral scheme used by every curve
    computation ("simpson" or "trapezoid"); ``weights`` integrate over the
    whole grid with the same rule, so ``weights @ f == cumulative(f)[-1]``.
    """

    nodes: np.ndarray
    horizon: float
    terminal_margin: float
    weights: np.ndarray
    rule: str = "simpson"
    step: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "step", float(self.nodes[1] - self.nodes[0]))
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    def __len__(self) -> int:
        return self.nodes.size

    @property
    def end(self) -> float:
        return float(self.nodes[-1])

    def index_of(self, t: float) -> int:
        """Index of the node nearest to ``t``."""
        if t < -1e-12 or t > self.end + 1e-9 * self.horizon:
            raise ValueError(f"time {t} outside grid range [0, {self.end}]")
        return int(np.clip(np.rint(t / self.step), 0, len(self) - 1))

    def same_as(self, other: "TimeGrid") -> bool:
        return (
            self is other
            or (len(self) == len(other)
                and self.rule == other.rule
                and np.array_equal(self.nodes, other.nodes))
        )


RULES = ("simpson", "trapezoid")


def _quadrature_weights(nodes: np.ndarray, rule: str) -> np.ndarray:
    n = nodes.size
    if rule == "trapezoid":
        w = np.full(n, nodes[1] - nodes[0])
        w[0] *= 0.5
        w[-1] *= 0.5
        return w
    # the running Simpson rule is linear in f: its last entry applied to
    # each unit vector gives the weight of that node
    w = np.empty(n)
    for lo in range(0, n, 256):
        hi = min(n, lo + 256)
        basis = np.zeros((hi - lo, n))
        basis[np.arange(hi - lo), np.arange(lo, hi)] = 1.0
        w[lo:hi] = cumulative_simpson(basis, x=nodes, axis=1)[:, -1]
    return w


def make_uniform_grid(params: MarketParams, n: int,
                      epsilon_fraction: float = 0.01,
                      rule: str = "simpson") -> TimeGrid:
    """``n`` equally spaced nodes on ``[0, T(1 - epsilon_fraction)]``."""
    if int(n) != n or n < 8:
        raise ConfigError(f"grid needs at least 8 nodes, got {n}")
    if not 0.0 < epsilon_fraction < 1.0:
        raise ConfigError(f"epsilon_fraction must lie in (0, 1), got {epsilon_fraction}")
    if rule not in RULES:
        raise ConfigError(f"unknown quadrature rule {rule!r}")
    T = params.horizon
    end = T * (1.0 - epsilon_fraction)
    nodes = np.linspace(0.0, end, int(n))
    params.sigma_at(nodes)  # validates sigma(t) > 0 on the grid
    return TimeGrid(nodes=nodes, horizon=T, terminal_margin=T - end,
                    weights=_quadrature_weights(nodes, rule), rule=rule)


def fee_schedule(params: MarketParams, grid: TimeGrid) -> np.ndarray:
    """``k_t = kappa (T - t)`` on the grid nodes."""
    return params.kappa * (params.horizon - grid.nodes)


# ---------------------------------------------------------------- config file

CONFIG_KEYS = {
    "mu_v": float, "sigma_v": float, "sigma": float, "horizon": float,
    "kappa": float, "n_grid": int, "epsilon_fraction": float,
    "w0_insider": float, "w0_mm": float, "w0_noise": float,
}

DEFAULT_RUN = {"n_grid": 1000, "epsilon_fraction": 0.01}


def parse_config(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            conv = CONFIG_KEYS[key]
            out[key] = conv(float(value)) if conv is int and "." in value else conv(value)
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from None
    return out


def load_config(path) -> tuple[MarketParams, dict]:
    """Read a config file; returns the market parameters and grid options."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return config_from_mapping(parse_config(text))


def config_from_mapping(values: dict) -> tuple[MarketParams, dict]:
    values = dict(values)
    run = {k: values.pop(k, v) for k, v in DEFAULT_RUN.items()}
    return MarketParams(**values), run
