"""A regulator caps relative volatility at rv*; which fee slope does that allow?"""
from kylefee import MarketParams, make_uniform_grid, regulator_inverse_map
from kylefee.equilibrium import NegativeIntensityError, solve_equilibrium

params = MarketParams()
grid = make_uniform_grid(params, 1000)

for mode, opts in (("converged", {}), ("two rounds", {"iter_limit": 2})):
    print(mode)
    for rv_star in (1.03, 1.05, 1.08, 1.15, 1.21):
        sol = regulator_inverse_map(rv_star, params, grid, **opts)
        print(f"  rv* = {rv_star:4.2f} -> kappa* = {sol.kappa:.4f} "
              f"({sol.evaluations} equilibrium solves)")

# beyond a fee slope of about 0.107 no positive intensity exists
try:
    solve_equilibrium(params.with_kappa(0.11), grid)
except NegativeIntensityError as exc:
    print("\nkappa = 0.11:", exc)
