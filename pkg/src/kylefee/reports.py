"""Tables and figure data as plain (header, rows) pairs, plus the CSV writer."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .equilibrium import kyle_beta0, solve_equilibrium
from .metrics import informativeness, regulator_inverse_map, terminal_limits
from .model_config import MarketParams, TimeGrid
from .moments import order_flow_moments
from .profits import market_maker_profit_terminal, profit_curves

FLOAT_FORMAT = "%.12g"

TABLE1_KAPPA = 0.035
TABLE1_TIMES = tuple(float(t) for t in range(1, 11))
TABLE2_RV = (1.03, 1.05, 1.08, 1.15, 1.21)
TABLE2_TIME = 9.0

# largest fee slope with a positive intensity on the base case is about 0.107
FIG_KAPPA_SWEEP = tuple(np.round(np.linspace(0.0, 0.105, 22), 6))
FIG_CURVE_KAPPAS = (0.0, 0.025, 0.045, 0.07, 0.1)


def _fmt(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return FLOAT_FORMAT % float(x)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    return path


def kappa_tag(kappa: float) -> str:
    return "%g" % kappa


def _solve(params, grid, kappa, solver_opts):
    return solve_equilibrium(params.with_kappa(kappa), grid, **(solver_opts or {}))


# -- per-kappa curve files --------------------------------------------------

def beta_table(profile, params, grid):
    b0 = kyle_beta0(params, grid).beta
    return ["t", "beta", "beta0"], zip(grid.nodes, profile.beta, b0)


def diagnostics_rows(profile):
    return [(profile.kappa, i, r) for i, r in enumerate(profile.history)]


def metrics_table(profile, params, grid):
    m = informativeness(profile, params, grid)
    return (["t", "rv", "iota", "rho_vp", "rho_my", "var_p", "var_m"],
            zip(m.t, m.rv, m.iota, m.rho_vp, m.rho_my, m.var_p, m.var_m))


def profits_table(profile, params, grid):
    pc = profit_curves(profile, params, grid)
    return ["t", "p_I", "p_M", "p_N"], zip(pc.t, pc.insider, pc.market_maker, pc.noise)


# -- tables ------------------------------------------------------------------

def table1(params: MarketParams, grid: TimeGrid, solver_opts=None, kappa=TABLE1_KAPPA,
           times=TABLE1_TIMES):
    """Rows rho_my, rho_vp, var_p, var_m, iota against time.

    Columns at the horizon take the analytic limits (gamma_T = k_T = 0).
    """
    p = params.with_kappa(kappa)
    m = informativeness(_solve(params, grid, kappa, solver_opts), p, grid)
    lim = terminal_limits(p)
    names = ("rho_my", "rho_vp", "var_p", "var_m", "iota")
    rows = []
    for nm in names:
        row = [nm]
        for t in times:
            row.append(lim[nm] if t >= params.horizon else float(m.at(nm, t)))
        rows.append(row)
    return ["quantity"] + [_fmt(t) for t in times], rows


def table2_data(params: MarketParams, grid: TimeGrid, solver_opts=None, rv_stars=TABLE2_RV,
                t=TABLE2_TIME, kappa_max=0.1, tol=1e-6):
    out = []
    for rv in rv_stars:
        sol = regulator_inverse_map(rv, params, grid, kappa_max=kappa_max, tol=tol,
                                    **(solver_opts or {}))
        p = params.with_kappa(sol.kappa)
        pc = profit_curves(sol.profile, p, grid)
        m = informativeness(sol.profile, p, grid)
        out.append({
            "rv_star": rv, "kappa_star": sol.kappa, "sup_rv": sol.sup_rv,
            "p_M": float(np.interp(t, grid.nodes, pc.market_maker)),
            "p_I": float(np.interp(t, grid.nodes, pc.insider)),
            "iota": float(m.at("iota", t)),
        })
    return out


def table2(params, grid, solver_opts=None, **kw):
    data = table2_data(params, grid, solver_opts, **kw)
    header = ["rv_star"] + [_fmt(d["rv_star"]) for d in data]
    rows = [[label] + [d[key] for d in data] for label, key in
            (("kappa_star", "kappa_star"), ("p_M_9", "p_M"), ("p_I_9", "p_I"), ("iota_9", "iota"))]
    return header, rows


# -- figures -----------------------------------------------------------------

def fig1(params, grid, solver_opts=None, kappa=0.045, points=101):
    """Covariance surface ``C(s, t)`` on an evenly thinned node set."""
    prof = _solve(params, grid, kappa, solver_opts)
    mom = order_flow_moments(prof, params.with_kappa(kappa), grid)
    idx = np.unique(np.linspace(0, len(grid) - 1, points).round().astype(int))
    C = mom.covariance_matrix(idx)
    t = grid.nodes[idx]
    return ["s\\t"] + [_fmt(x) for x in t], [[ti] + list(row) for ti, row in zip(t, C)]


def fig2(params, grid, solver_opts=None, kappas=FIG_KAPPA_SWEEP, t_mid=2.0):
    rows = []
    for k in kappas:
        prof = _solve(params, grid, k, solver_opts)
        p = params.with_kappa(k)
        pc = profit_curves(prof, p, grid)
        rows.append((k, np.interp(t_mid, grid.nodes, pc.market_maker),
                     market_maker_profit_terminal(prof, p, grid)))
    return ["kappa", f"p_M_t{_fmt(t_mid)}", "p_M_T"], rows


def fig3(params, grid, solver_opts=None, kappa=0.045):
    prof = _solve(params, grid, kappa, solver_opts)
    b0 = kyle_beta0(params, grid).beta
    return ["t", "beta_kappa0", f"beta_kappa{kappa_tag(kappa)}"], zip(grid.nodes, b0, prof.beta)


def fig4(params, grid, solver_opts=None, kappas=FIG_KAPPA_SWEEP, times=(5.0, 9.0)):
    rows = []
    for k in kappas:
        b = _solve(params, grid, k, solver_opts).beta
        rows.append([k] + [np.interp(t, grid.nodes, b) for t in times])
    return ["kappa"] + [f"beta_t{_fmt(t)}" for t in times], rows


def fig5(params, grid, solver_opts=None, kappas=FIG_CURVE_KAPPAS):
    cols = []
    for k in kappas:
        prof = _solve(params, grid, k, solver_opts)
        cols.append(order_flow_moments(prof, params.with_kappa(k), grid).variance)
    return (["t"] + [f"V_kappa{kappa_tag(k)}" for k in kappas],
            zip(grid.nodes, *cols))


def fig6(params, grid, solver_opts=None, kappas=FIG_KAPPA_SWEEP, times=(1.0, 5.0, 9.0)):
    rows = []
    for k in kappas:
        prof = _solve(params, grid, k, solver_opts)
        V = order_flow_moments(prof, params.with_kappa(k), grid).variance
        rows.append([k] + [np.interp(t, grid.nodes, V) for t in times])
    return ["kappa"] + [f"V_t{_fmt(t)}" for t in times], rows


def _profit_fig(params, grid, solver_opts, kappa):
    prof = _solve(params, grid, kappa, solver_opts)
    return profits_table(prof, params.with_kappa(kappa), grid)


def fig7(params, grid, solver_opts=None, kappa=0.045):
    return _profit_fig(params, grid, solver_opts, kappa)


def fig8(params, grid, solver_opts=None, kappa=0.07):
    return _profit_fig(params, grid, solver_opts, kappa)


def fig9(params, grid, solver_opts=None, kappas=FIG_KAPPA_SWEEP, times=(0.01, 3.6, 9.0)):
    rows = []
    for k in kappas:
        prof = _solve(params, grid, k, solver_opts)
        rv = informativeness(prof, params.with_kappa(k), grid).rv
        rows.append([k] + [np.interp(t, grid.nodes, rv) for t in times])
    return ["kappa"] + [f"rv_t{_fmt(t)}" for t in times], rows


def _rv_fig(params, grid, solver_opts, kappa, level=1.15):
    prof = _solve(params, grid, kappa, solver_opts)
    rv = informativeness(prof, params.with_kappa(kappa), grid).rv
    return ["t", "rv", f"above_{_fmt(level)}"], zip(grid.nodes, rv, rv > level)


def fig10(params, grid, solver_opts=None, kappa=0.07):
    return _rv_fig(params, grid, solver_opts, kappa)


def fig11(params, grid, solver_opts=None, kappa=0.09):
    return _rv_fig(params, grid, solver_opts, kappa)


FIGURES = {
    "fig1_covariance": fig1, "fig2_mm_profit_vs_kappa": fig2, "fig3_beta": fig3,
    "fig4_beta_vs_kappa": fig4, "fig5_variance": fig5, "fig6_variance_vs_kappa": fig6,
    "fig7_profits": fig7, "fig8_profits": fig8, "fig9_rv_vs_kappa": fig9,
    "fig10_rv": fig10, "fig11_rv": fig11,
}
