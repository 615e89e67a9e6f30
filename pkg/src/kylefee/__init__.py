"""Continuous-time Kyle insider trading when the market maker charges order-flow fees."""

from .model_config import (ConfigError, MarketParams, TimeGrid, fee_schedule, load_config,
                           make_uniform_grid, parse_config)
from .equilibrium import (ConvergenceError, DegenerateDenominatorError, IntensityProfile,
                          NegativeIntensityError, SolverError, fixed_point_rhs, gamma_of_beta,
                          kyle_beta0, solve_equilibrium, variational_residual)
from .moments import (MomentSet, order_flow_covariance, order_flow_mean, order_flow_moments,
                      order_flow_variance)
from .profits import (ProfitCurves, insider_profit_curve, insider_profit_terminal,
                      market_maker_profit_curve, market_maker_profit_terminal,
                      noise_trader_profit_curve, profit_curves)
from .metrics import (MetricCurves, informativeness, regulator_inverse_map,
                      relative_volatility, sup_relative_volatility)
from .montecarlo import (SimulationBatch, SimulationSpec, convergence_check, estimate_moments,
                         oracle_checks, simulate_paths)

__version__ = "0.1.0"
