"""Monte Carlo simulation of order flow, filter and wealths.

Each path draws ``v ~ N(mu_v, sigma_v^2)`` and a Brownian path on a uniform
grid over ``[0, T - eps]``.  The order flow follows the Euler step

    dy = beta (v - p) dt + sigma dB,    p = m + k y,

and ``(m, gamma)`` is updated by the exact discrete Kalman filter for the
observation ``dy + beta p dt = beta v dt + sigma dB``, so ``m`` is a discrete
martingale and ``v - m`` is orthogonal to every function of the observations.
Wealth increments are ``x_{i-1} dp``, ``-y_{i-1} dp`` and ``z_{i-1} dp`` with
``y = x + z``; they cancel path by path.  Terminal wealth settles the last
inventories at ``p_T = v``.

Every path owns a Philox stream keyed by ``(seed, path index)``, so results
do not depend on chunking or on the number of worker threads.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .equilibrium import gamma_of_beta
from .metrics import informativeness
from .model_config import MarketParams, TimeGrid, fee_schedule
from .moments import order_flow_moments
from .profits import insider_profit_curve, market_maker_profit_curve, _prepare, _insider_parts

log = logging.getLogger(__name__)

MIN_STEPS = 100
DEFAULT_PROBES = (1.0, 3.0, 5.0, 7.0, 9.0)
ZERO_SUM_TOL = 1e-10
N_SE = 3.0
# accuracy of the analytic correlation curves plus the O(h^2) gap between the
# discrete Kalman gain and the continuous one; matters only when rho_my = 1
# identically (kappa = 0) and the sampling error collapses
CORR_FLOOR = 1e-6
CORR_FLOOR_H2 = 1e-2


@dataclass(frozen=True)
class SimulationSpec:
    n_paths: int
    n_steps: int = 3960
    seed: int = 20240917
    probes: tuple = DEFAULT_PROBES
    chunk: int = 2048
    workers: int = 1

    def __post_init__(self):
        if int(self.n_paths) < 1:
            raise ValueError("n_paths must be positive")
        if int(self.n_steps) < MIN_STEPS:
            raise ValueError(f"n_steps must be at least {MIN_STEPS}, got {self.n_steps}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.chunk < 1 or self.workers < 1:
            raise ValueError("chunk and workers must be positive")


@dataclass(frozen=True, eq=False)
class SimulationBatch:
    """Per-path samples at the probe nodes plus terminal wealth.

    Sample arrays have shape ``(n_paths, n_probes)``; ``wealth`` is
    ``(n_paths, 3)`` for insider, market maker and noise traders after
    settlement, net of initial wealth.
    """

    spec: SimulationSpec
    kappa: float
    t: np.ndarray            # probe times (simulation nodes)
    probe_index: np.ndarray
    step: float
    v: np.ndarray
    y: np.ndarray
    m: np.ndarray
    p: np.ndarray
    w_insider: np.ndarray
    w_mm: np.ndarray
    w_noise: np.ndarray
    wealth: np.ndarray
    gamma: np.ndarray        # simulated filter variance at the probes
    zero_sum_error: float
    end: float
    terminal_gamma: float
    initial_wealth: float

    @property
    def n_paths(self) -> int:
        return self.v.size


def _path_normals(seed: int, paths: range, n: int) -> np.ndarray:
    out = np.empty((len(paths), n))
    for r, j in enumerate(paths):
        gen = np.random.Generator(np.random.Philox(key=(int(seed) << 64) | j))
        out[r] = gen.standard_normal(n)
    return out


def _simulate_chunk(paths, seed, t, beta, k, sig, params, probe_index):
    n_steps = t.size - 1
    z_all = _path_normals(seed, paths, n_steps + 1)
    v = params.mu_v + params.sigma_v * z_all[:, 0]
    dts = np.diff(t)
    P = len(paths)
    y = np.zeros(P)
    x = np.zeros(P)
    z = np.zeros(P)
    m = np.full(P, params.mu_v)
    g = params.gamma0
    wI = np.zeros(P)
    wM = np.zeros(P)
    wN = np.zeros(P)
    p = m + k[0] * y
    rec = {name: np.empty((P, probe_index.size)) for name in ("y", "m", "p", "wI", "wM", "wN")}
    grec = np.empty(probe_index.size)
    slot = {int(i): c for c, i in enumerate(probe_index)}

    def record(i):
        c = slot[i]
        rec["y"][:, c] = y
        rec["m"][:, c] = m
        rec["p"][:, c] = p
        rec["wI"][:, c] = wI
        rec["wM"][:, c] = wM
        rec["wN"][:, c] = wN
        grec[c] = g

    if 0 in slot:
        record(0)
    for i in range(1, n_steps + 1):
        dt = dts[i - 1]
        b = beta[i - 1]
        s = sig[i - 1]
        dB = np.sqrt(dt) * z_all[:, i]
        dx = b * (v - p) * dt
        dn = s * dB
        obs = b * v * dt + dn               # = dy + b p dt
        gain = g * b * dt / (b * b * g * dt * dt + s * s * dt)
        m_new = m + gain * (obs - b * m * dt)
        g = g * s * s / (s * s + b * b * g * dt)
        x_prev, y_prev, z_prev = x, y, z
        x = x + dx
        z = z + dn
        y = y + dx + dn
        m = m_new
        p_new = m + k[i] * y
        dp = p_new - p
        wI = wI + x_prev * dp
        wM = wM - y_prev * dp
        wN = wN + z_prev * dp
        p = p_new
        if i in slot:
            record(i)
    # settlement at p_T = v
    dp = v - p
    fI = wI + x * dp
    fM = wM - y * dp
    fN = wN + z * dp
    # y = x + z holds only to roundoff, so the three sums are checked, not forced
    zs = float(np.max(np.abs(fI + fM + fN))) if P else 0.0
    return v, rec, grec, np.column_stack([fI, fM, fN]), zs, g


def simulate_paths(beta, params: MarketParams, spec: SimulationSpec,
                   grid: TimeGrid | None = None) -> SimulationBatch:
    """Simulate ``spec.n_paths`` paths under the intensity ``beta``.

    ``beta`` is an :class:`IntensityProfile` (or an array on ``grid``) and is
    linearly interpolated onto the simulation grid, which spans the same
    ``[0, T - eps]`` as ``grid``.
    """
    grid = grid if grid is not None else getattr(beta, "grid")
    kb = getattr(beta, "kappa", params.kappa)
    if not np.isclose(kb, params.kappa, rtol=0, atol=1e-15):
        raise ValueError(f"profile solved for kappa={kb}, params have kappa={params.kappa}")
    b_grid = np.asarray(getattr(beta, "beta", beta), dtype=float)
    t = np.linspace(0.0, grid.end, int(spec.n_steps) + 1)
    b = np.interp(t, grid.nodes, b_grid)
    k = params.kappa * (params.horizon - t)
    sig = params.sigma_at(t)

    probes = np.asarray(spec.probes, dtype=float)
    if np.any((probes < 0) | (probes > grid.end + 1e-12)):
        raise ValueError(f"probe times must lie in [0, {grid.end}]")
    probe_index = np.unique(np.rint(probes / (t[1] - t[0])).astype(int))

    n = int(spec.n_paths)
    chunks = [range(a, min(a + spec.chunk, n)) for a in range(0, n, spec.chunk)]
    run = lambda r: _simulate_chunk(r, spec.seed, t, b, k, sig, params, probe_index)
    if spec.workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(spec.workers) as ex:
            parts = list(ex.map(run, chunks))
    else:
        parts = [run(r) for r in chunks]

    cat = lambda key: np.concatenate([pt[1][key] for pt in parts])
    w0 = params.w0_insider + params.w0_mm + params.w0_noise
    return SimulationBatch(
        spec=spec, kappa=params.kappa, t=t[probe_index], probe_index=probe_index,
        step=float(t[1] - t[0]),
        v=np.concatenate([pt[0] for pt in parts]),
        y=cat("y"), m=cat("m"), p=cat("p"),
        w_insider=cat("wI"), w_mm=cat("wM"), w_noise=cat("wN"),
        wealth=np.concatenate([pt[3] for pt in parts]),
        gamma=parts[0][2],
        zero_sum_error=max(pt[4] for pt in parts),
        end=float(t[-1]), terminal_gamma=float(parts[0][5]), initial_wealth=w0,
    )


# -- estimators -------------------------------------------------------------

def _mean_se(a):
    n = a.shape[0]
    return a.mean(axis=0), a.std(axis=0, ddof=1) / np.sqrt(n)


def _var_se(a):
    n = a.shape[0]
    c = a - a.mean(axis=0)
    var = (c * c).sum(axis=0) / (n - 1)
    m4 = (c ** 4).mean(axis=0)
    return var, np.sqrt(np.maximum(m4 - var * var, 0.0) / n)


def _cov_se(a, b):
    n = a.shape[0]
    u = (a - a.mean(axis=0)) * (b - b.mean(axis=0))
    return u.sum(axis=0) / (n - 1), u.std(axis=0, ddof=1) / np.sqrt(n)


def _corr_se(a, b):
    """Sample correlation with a delta-method standard error."""
    n = a.shape[0]
    za = (a - a.mean(axis=0)) / a.std(axis=0)
    zb = (b - b.mean(axis=0)) / b.std(axis=0)
    r = (za * zb).mean(axis=0)
    infl = za * zb - 0.5 * r * (za * za + zb * zb)
    return r, infl.std(axis=0, ddof=1) / np.sqrt(n)


@dataclass(frozen=True, eq=False)
class MomentTable:
    t: np.ndarray
    columns: dict   # name -> (estimate, standard error)
    n_paths: int

    def rows(self):
        names = list(self.columns)
        header = ["t"] + [c for nm in names for c in (nm, nm + "_se")]
        body = []
        for i, ti in enumerate(self.t):
            row = [ti]
            for nm in names:
                est, se = self.columns[nm]
                row += [est[i], se[i]]
            body.append(row)
        return header, body


def estimate_moments(batch: SimulationBatch) -> MomentTable:
    """Sample moments at the probes with standard errors."""
    if batch.n_paths < 2:
        raise ValueError("need at least two paths")
    v = batch.v[:, None]
    vv = np.broadcast_to(v, batch.y.shape)
    cols = {
        "mean_y": _mean_se(batch.y),
        "var_y": _var_se(batch.y),
        "cov_vy": _cov_se(vv, batch.y),
        "cov_err_y": _cov_se(vv - batch.m, batch.y),
        "corr_my": _corr_se(batch.m, batch.y),
        "corr_vp": _corr_se(vv, batch.p),
        "var_p": _var_se(batch.p),
        "var_m": _var_se(batch.m),
        "mse_p": _mean_se((vv - batch.p) ** 2),
        "profit_insider": _mean_se(batch.w_insider),
        "profit_mm": _mean_se(batch.w_mm),
        "profit_noise": _mean_se(batch.w_noise),
    }
    return MomentTable(t=batch.t, columns=cols, n_paths=batch.n_paths)


@dataclass(frozen=True)
class Check:
    name: str
    t: float
    estimate: float
    target: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(abs(self.estimate - self.target) <= self.tolerance)


def convergence_check(batch: SimulationBatch, beta, params: MarketParams,
                      grid: TimeGrid) -> dict:
    """Sample ``E(v - p_t)^2`` against ``S_t = gamma_t + k_t^2 V_t``.

    Also reports whether the analytic ``S_t`` decreases across the probes.
    """
    g = gamma_of_beta(beta, params, grid).gamma
    V = order_flow_moments(beta, params, grid).variance
    k = fee_schedule(params, grid)
    S = np.interp(batch.t, grid.nodes, g + k * k * V)
    est, se = _mean_se((batch.v[:, None] - batch.p) ** 2)
    checks = [Check("mse_p", float(t), float(e), float(s), N_SE * float(sd))
              for t, e, s, sd in zip(batch.t, est, S, se)]
    return {"t": batch.t, "analytic": S, "estimate": est, "se": se,
            "decreasing": bool(np.all(np.diff(S) < 0)), "checks": checks}


def oracle_checks(batch: SimulationBatch, beta, params: MarketParams,
                  grid: TimeGrid) -> list:
    """All Monte Carlo versus closed-form comparisons at ``N_SE`` standard errors."""
    tab = estimate_moments(batch)
    t = batch.t
    V = order_flow_moments(beta, params, grid).variance
    met = informativeness(beta, params, grid)
    pI = insider_profit_curve(beta, params, grid)
    pM = market_maker_profit_curve(beta, params, grid)
    at = lambda f: np.interp(t, grid.nodes, f)

    out = []

    def add(name, col, target, floor=0.0):
        est, se = tab.columns[col]
        for ti, e, s, tg in zip(t, est, se, target):
            out.append(Check(name, float(ti), float(e), float(tg), N_SE * float(s) + floor))

    zero = np.zeros_like(t)
    add("mean_y", "mean_y", zero)
    add("var_y", "var_y", at(V))
    add("cov_err_y", "cov_err_y", zero)
    floor = CORR_FLOOR + CORR_FLOOR_H2 * batch.step ** 2
    add("corr_my", "corr_my", at(met.rho_my), floor)
    add("corr_vp", "corr_vp", at(met.rho_vp), floor)
    add("profit_insider", "profit_insider", at(pI))
    add("profit_mm", "profit_mm", at(pM))
    add("profit_noise", "profit_noise", -at(pI) - at(pM))
    out += convergence_check(batch, beta, params, grid)["checks"]

    # m is a martingale: increments between successive probes have mean zero
    m0 = np.full((batch.n_paths, 1), params.mu_v)
    inc = np.diff(np.hstack([m0, batch.m]), axis=1)
    est, se = _mean_se(inc)
    for ti, e, s in zip(t, est, se):
        out.append(Check("martingale_m", float(ti), float(e), 0.0, N_SE * float(s)))

    # filter variance follows the continuous Riccati solution to O(h)
    g = gamma_of_beta(beta, params, grid).gamma
    b = np.asarray(getattr(beta, "beta", beta))
    slope = np.max(b * b * g * g / params.sigma_at(grid.nodes) ** 2)
    for ti, gs, ga in zip(t, batch.gamma, at(g)):
        out.append(Check("gamma_ode", float(ti), float(gs), float(ga),
                         2.0 * batch.step * float(ti) * slope + 1e-12))

    # settled terminal wealth: insider int beta (gamma + k^2 V), market maker p_M + k V
    b_, g_, mom, k = _prepare(beta, params, grid)
    direct = _insider_parts(b_, g_, mom, k, params, grid)[0]
    mm_end = pM[-1] + k[-1] * mom.variance[-1]
    for j, (name, target) in enumerate((("terminal_insider", direct[-1]),
                                        ("terminal_mm", mm_end))):
        e, s = _mean_se(batch.wealth[:, j])
        out.append(Check(name, batch.end, float(e), float(target), N_SE * float(s)))

    out.append(Check("zero_sum", batch.end, batch.zero_sum_error, 0.0, ZERO_SUM_TOL))
    return out
