"""Check the closed-form curves against simulated paths.

Every path draws v, runs the order flow and the Kalman filter, and books each
trader's gains; the three wealths cancel path by path.
"""
import time

from kylefee import (MarketParams, SimulationSpec, make_uniform_grid, oracle_checks,
                     simulate_paths, solve_equilibrium)

params = MarketParams(kappa=0.045)
grid = make_uniform_grid(params, 1000)
beta = solve_equilibrium(params, grid)

start = time.time()
batch = simulate_paths(beta, params, SimulationSpec(20_000, workers=4), grid)
print(f"{batch.n_paths} paths in {time.time() - start:.1f}s, "
      f"max |w_I + w_M + w_N| = {batch.zero_sum_error:.1e}")

for c in oracle_checks(batch, beta, params, grid):
    if c.name in ("var_y", "profit_insider", "profit_mm", "corr_vp"):
        print(f"{c.name:15s} t={c.t:4.1f}  mc {c.estimate:+.5f}  closed form {c.target:+.5f}"
              f"  {'ok' if c.passed else 'OFF'}")
