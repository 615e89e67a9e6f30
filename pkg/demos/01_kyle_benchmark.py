"""Without fees the model is the classic continuous-time Kyle market.

The insider trades at intensity sigma sqrt(T) / (sigma_v (T - t)), the
filter error falls linearly to zero and the insider earns sigma sigma_v sqrt(T).
"""
import numpy as np

from kylefee import (MarketParams, gamma_of_beta, insider_profit_terminal, make_uniform_grid,
                     solve_equilibrium)

params = MarketParams()
grid = make_uniform_grid(params, 1000)
beta = solve_equilibrium(params, grid)
gamma = gamma_of_beta(beta, params, grid).gamma

print("t      beta      gamma    sigma_v^2 (T-t)/T")
for t in (0, 2.5, 5, 7.5, 9.5):
    print(f"{t:4.1f}  {np.interp(t, grid.nodes, beta.beta):8.5f}  {np.interp(t, grid.nodes, gamma):8.5f}"
          f"  {0.09 * (10 - t) / 10:8.5f}")

print(f"\ninsider profit {insider_profit_terminal(beta, params, grid):.6f}"
      f"  (sigma sigma_v sqrt(T) = {0.2 * 0.3 * np.sqrt(10):.6f})")
