"""Acceptance criteria 1-8.  Each test records one PASS/FAIL line, repeated in
the terminal summary, then asserts at the stated tolerance."""

import numpy as np
import pytest

from conftest import KAPPAS, record_acceptance
from kylefee import (MarketParams, fee_schedule, fixed_point_rhs, gamma_of_beta,
                     informativeness, insider_profit_terminal, make_uniform_grid,
                     order_flow_moments, profit_curves, regulator_inverse_map,
                     relative_volatility, kyle_beta0, solve_equilibrium,
                     sup_relative_volatility, variational_residual)
from kylefee.montecarlo import SimulationSpec, oracle_checks, simulate_paths

TABLE1_IOTA = (.10, .19, .28, .37, .45, .54, .62, .71, .83, 1.00)
TABLE1_VAR_P = (.02, .04, .05, .06, .07, .07, .08, .08, .08, .09)
TABLE1_VAR_M = (.009, .02, .03, .03, .04, .05, .06, .06, .07, .09)
TABLE2_RV = (1.03, 1.05, 1.08, 1.15, 1.21)
TABLE2_KAPPA = (.025, .035, .045, .070, .090)
TABLE2_P_M = (.037, .049, .060, .087, .100)
TABLE2_P_I = (.126, .118, .100, .055, .045)


def _table1_value(curves, name, t, horizon, limit):
    return limit if t >= horizon else float(curves.at(name, t))


def test_criterion_1_kyle_reduction(base, grid):
    prof = solve_equilibrium(base, grid)
    t = grid.nodes
    T, s, sv = 10.0, 0.2, 0.3
    closed = s * np.sqrt(T) / (sv * (T - t))
    beta_err = float(np.max(np.abs(prof.beta / closed - 1.0)))
    gamma_err = float(np.max(np.abs(gamma_of_beta(prof, base, grid).gamma - sv ** 2 * (T - t) / T)))
    profit = insider_profit_terminal(prof, base, grid)
    profit_err = abs(profit / (s * sv * np.sqrt(T)) - 1.0)
    ok = beta_err <= 1e-12 and gamma_err <= 1e-6 and profit_err <= 1e-4
    record_acceptance(1, ok, f"beta rel err {beta_err:.2e}, gamma abs err {gamma_err:.2e}, "
                             f"terminal profit {profit:.6f} (rel err {profit_err:.2e})")
    assert ok


def test_criterion_2_fixed_point_quality(grid, profile):
    worst_defect = worst_weak = worst_point = 0.0
    for k in KAPPAS:
        prof = profile(k)
        p = MarketParams(kappa=k)
        defect = float(np.max(np.abs(fixed_point_rhs(prof, p, grid) - prof.beta)))
        weak = variational_residual(prof, p, grid)
        worst_defect = max(worst_defect, defect)
        worst_weak = max(worst_weak, float(np.max(np.abs(weak))))
        # divided by the mass of each hat function: a pointwise-scale residual
        worst_point = max(worst_point, float(np.max(np.abs(weak) / grid.step)))
    ok = worst_defect <= 1e-8 and worst_weak <= 1e-7 and worst_point <= 1e-7
    record_acceptance(2, ok, f"max defect {worst_defect:.2e}, max weak residual {worst_weak:.2e}"
                             f" (per unit hat mass {worst_point:.2e})")
    assert ok


def test_criterion_3_table1(grid, profile):
    p = MarketParams(kappa=0.035)
    m = informativeness(profile(0.035, 2), p, grid)
    times = range(1, 11)
    iota = [_table1_value(m, "iota", t, 10, 1.0) for t in times]
    var_p = [_table1_value(m, "var_p", t, 10, 0.09) for t in times]
    var_m = [_table1_value(m, "var_m", t, 10, 0.09) for t in times]
    d_iota = np.max(np.abs(np.subtract(iota, TABLE1_IOTA)))
    d_vp = np.max(np.abs(np.subtract(var_p, TABLE1_VAR_P)))
    d_vm = np.max(np.abs(np.subtract(var_m, TABLE1_VAR_M)))

    conv = profile(0.035)
    mc = informativeness(conv, p, grid)
    g = gamma_of_beta(conv, p, grid).gamma
    inv_iota = float(np.max(np.abs(mc.iota - mc.rho_vp ** 2)))
    inv_var = float(np.max(np.abs(mc.var_m + g - p.gamma0)))
    ok = d_iota <= 0.05 and d_vp <= 0.01 and d_vm <= 0.01 and inv_iota <= 1e-15 and inv_var <= 1e-15
    record_acceptance(3, ok, f"iota {np.round(iota, 3).tolist()}; max |d iota| {d_iota:.3f}, "
                             f"|d var_p| {d_vp:.4f}, |d var_m| {d_vm:.4f}; converged invariants "
                             f"{inv_iota:.1e}, {inv_var:.1e}")
    assert ok


def test_criterion_4_table2(base, grid):
    kstar, pm, pi = [], [], []
    for rv in TABLE2_RV:
        sol = regulator_inverse_map(rv, base, grid, iter_limit=2)
        p = base.with_kappa(sol.kappa)
        pc = profit_curves(sol.profile, p, grid)
        kstar.append(sol.kappa)
        pm.append(float(np.interp(9.0, grid.nodes, pc.market_maker)))
        pi.append(float(np.interp(9.0, grid.nodes, pc.insider)))
    dk = np.max(np.abs(np.subtract(kstar, TABLE2_KAPPA)))
    dm = np.max(np.abs(np.subtract(pm, TABLE2_P_M)))
    di = np.max(np.abs(np.subtract(pi, TABLE2_P_I)))
    mono = bool(np.all(np.diff(pm) > 0) and np.all(np.diff(pi) < 0))
    ok = dk <= 0.005 and dm <= 0.02 and di <= 0.02 and mono
    record_acceptance(4, ok, f"kappa* {np.round(kstar, 4).tolist()} (max dev {dk:.4f}); "
                             f"p_M(9) {np.round(pm, 3).tolist()} (max dev {dm:.3f}); "
                             f"p_I(9) {np.round(pi, 3).tolist()} (max dev {di:.3f}); "
                             f"monotone rows {mono}")
    assert ok


def _crossings_from_below(t, a, b):
    d = a - b
    i = np.nonzero((d[:-1] <= 0) & (d[1:] > 0))[0]
    return t[i + 1]


def test_criterion_5_figure_shapes(grid, profile):
    t = grid.nodes
    p45, p07, p09 = (MarketParams(kappa=k) for k in (0.045, 0.07, 0.09))
    pc45 = profit_curves(profile(0.045, 2), p45, grid)
    cross = _crossings_from_below(t, pc45.insider, pc45.market_maker)
    a = cross.size > 0 and bool(np.all((cross > 5) & (cross < 9)))
    pc07 = profit_curves(profile(0.07, 2), p07, grid)
    sel = t <= 9
    gap = float(np.max(pc07.insider[sel] - pc07.market_maker[sel]))
    b = gap <= 0
    rv07 = relative_volatility(profile(0.07, 2), kyle_beta0(p07, grid), p07, grid)
    c = abs(rv07.max() - 1.15) <= 0.03
    rv09 = relative_volatility(profile(0.09, 2), kyle_beta0(p09, grid), p09, grid)
    above3 = np.interp(3.0, t, rv09) > 1.15
    at9 = float(np.interp(9.0, t, rv09))
    d = bool(above3) and at9 <= 1.15
    ok = a and b and c and d
    record_acceptance(5, ok, f"(a) p_I crosses p_M from below at t={np.round(cross, 2).tolist()} "
                             f"[{'ok' if a else 'fail'}]; (b) max_(t<=9) p_I - p_M at 0.07 = {gap:.4f} "
                             f"[{'ok' if b else 'fail'}]; (c) max rv(.,0.07) = {rv07.max():.4f} "
                             f"[{'ok' if c else 'fail'}]; (d) rv(3,0.09) = {np.interp(3.0, t, rv09):.3f},"
                             f" rv(9,0.09) = {at9:.3f} [{'ok' if d else 'fail'}]")
    assert ok


CRITERION6_CHECKS = {"mean_y", "var_y", "cov_err_y", "zero_sum", "profit_insider",
                     "profit_mm", "corr_vp"}


@pytest.mark.slow
def test_criterion_6_monte_carlo(grid, profile):
    failed, total, extra_failed = [], 0, []
    for k in (0.0, 0.045):
        p = MarketParams(kappa=k)
        prof = profile(k)
        batch = simulate_paths(prof, p, SimulationSpec(50_000, workers=4), grid)
        for c in oracle_checks(batch, prof, p, grid):
            if c.name in CRITERION6_CHECKS:
                total += 1
                if not c.passed:
                    failed.append(f"{c.name}@{c.t:g}(kappa={k})")
            elif not c.passed:
                extra_failed.append(f"{c.name}@{c.t:g}(kappa={k})")
    ok = not failed
    record_acceptance(6, ok, f"{total - len(failed)}/{total} required 3-s.e. checks pass"
                             f" (failed: {failed or 'none'}); supplementary failures: "
                             f"{extra_failed or 'none'}")
    assert ok


def test_criterion_7_variance_ode_and_psd(grid, profile):
    worst_ratio, min_eig = 0.0, np.inf
    rng = np.random.default_rng(7)
    h = grid.step
    for k in (0.0,) + KAPPAS:
        p = MarketParams(kappa=k)
        prof = profile(k)
        mom = order_flow_moments(prof, p, grid)
        V = mom.variance
        s2 = p.sigma_at(grid.nodes) ** 2
        kk = fee_schedule(p, grid)
        dV = (V[2:] - V[:-2]) / (2 * h)
        res = np.abs(dV + 2 * kk[1:-1] * prof.beta[1:-1] * V[1:-1] - s2[1:-1])
        worst_ratio = max(worst_ratio, float(res.max() / (5 * h * h * s2.max())))
        for _ in range(50):
            idx = np.sort(rng.choice(len(grid), 8, replace=False))
            C = mom.covariance_matrix(idx)
            ev = np.linalg.eigvalsh(C)
            min_eig = min(min_eig, float(ev.min() / ev.max()))
    ok = worst_ratio <= 1.0 and min_eig >= -1e-12
    record_acceptance(7, ok, f"max FD residual / (5 h^2 |sigma^2|) = {worst_ratio:.3f}; "
                             f"min relative eigenvalue over 300 random 8-node subsets {min_eig:.2e}")
    assert ok


def test_criterion_8_regulator_map(base, grid):
    errs = []
    for rv in TABLE2_RV:
        sol = regulator_inverse_map(rv, base, grid, tol=1e-6)
        back, _ = sup_relative_volatility(base.with_kappa(sol.kappa), grid)
        errs.append(abs(back - rv))
    b0 = kyle_beta0(base, grid)
    rv0 = relative_volatility(solve_equilibrium(base, grid), b0, base, grid)
    exact_one = bool(np.all(rv0 == 1.0))
    ok = max(errs) <= 1e-4 and exact_one
    record_acceptance(8, ok, f"max |sup rv(kappa*) - rv*| = {max(errs):.2e}; rv(t,0) == 1 "
                             f"exactly: {exact_one}")
    assert ok
