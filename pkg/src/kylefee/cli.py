"""Command-line front end: ``kylefee {solve,tables,figures,simulate}``.

Exit codes: 0 success, 1 usage or config error, 2 solver failure,
3 Monte Carlo oracle failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import reports
from .equilibrium import SolverError, solve_equilibrium
from .metrics import InconsistentCorrelationError, NonMonotoneBracketError, TargetUnreachableError
from .model_config import ConfigError, MarketParams, config_from_mapping, load_config, make_uniform_grid
from .montecarlo import DEFAULT_PROBES, SimulationSpec, estimate_moments, oracle_checks, simulate_paths

log = logging.getLogger("kylefee")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_ORACLE = 0, 1, 2, 3
SIMULATE_KAPPAS = (0.0, 0.045)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunManifest:
    command: str
    params: MarketParams
    out: Path
    kappas: tuple
    n_grid: int
    epsilon_fraction: float
    iter_limit: int | None
    seed: int
    n_paths: int
    n_steps: int
    probes: tuple = DEFAULT_PROBES
    config: str | None = None
    workers: int = 1
    dump_wealth: bool = False
    solver: dict = field(default_factory=dict)

    def grid(self):
        return make_uniform_grid(self.params, self.n_grid, self.epsilon_fraction)

    @property
    def solver_opts(self):
        opts = dict(self.solver)
        if self.iter_limit is not None:
            opts["iter_limit"] = self.iter_limit
        return opts


def _float_list(text):
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("list must be nonempty")
    return vals


def _iter_limit(text):
    if text == "auto":
        return None
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--iter-limit takes an integer or 'auto', got {text!r}")
    if n < 1:
        raise argparse.ArgumentTypeError("--iter-limit must be at least 1")
    return n


def _u64(text):
    n = int(text)
    if not 0 <= n < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return n


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key = value parameter file (base case if omitted)")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--kappa", type=_float_list, help="comma-separated fee slopes")
    common.add_argument("--iter-limit", type=_iter_limit, default=None,
                        help="fixed number of substitution rounds, or 'auto' to converge")
    common.add_argument("--grid", type=int, help="number of grid nodes (overrides config)")
    common.add_argument("--tolerance", type=float, default=1e-8, help="solver sup-norm tolerance")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="kylefee", description="Kyle insider trading with order-flow fees")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="intensity, metric and profit curves per kappa")
    sub.add_parser("tables", parents=[common], help="informativeness and regulator tables")
    sub.add_parser("figures", parents=[common], help="data behind the eleven figures")
    sim = sub.add_parser("simulate", parents=[common], help="Monte Carlo oracle checks")
    sim.add_argument("--seed", type=_u64, default=SimulationSpec.seed)
    sim.add_argument("--paths", type=int, default=50_000)
    sim.add_argument("--steps", type=int, default=SimulationSpec.n_steps)
    sim.add_argument("--probes", type=_float_list, default=DEFAULT_PROBES)
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--dump-wealth", action="store_true", help="write per-path terminal wealth")
    return p


def manifest_from_args(args) -> RunManifest:
    if args.config:
        params, run = load_config(args.config)
    else:
        params, run = config_from_mapping({})
    n_grid = args.grid if args.grid is not None else run["n_grid"]
    if args.kappa is not None:
        kappas = args.kappa
    elif args.command == "simulate":
        kappas = SIMULATE_KAPPAS
    else:
        kappas = (params.kappa,)
    for k in kappas:
        params.with_kappa(k)  # validates
    return RunManifest(
        command=args.command, params=params, out=Path(args.out), kappas=tuple(kappas),
        n_grid=n_grid, epsilon_fraction=run["epsilon_fraction"], iter_limit=args.iter_limit,
        seed=getattr(args, "seed", SimulationSpec.seed),
        n_paths=getattr(args, "paths", 50_000), n_steps=getattr(args, "steps", SimulationSpec.n_steps),
        probes=tuple(getattr(args, "probes", DEFAULT_PROBES)), config=args.config,
        workers=getattr(args, "workers", 1), dump_wealth=getattr(args, "dump_wealth", False),
        solver={"tolerance": args.tolerance},
    )


def cmd_solve(man: RunManifest) -> int:
    grid = man.grid()
    diag = []
    for k in man.kappas:
        p = man.params.with_kappa(k)
        prof = solve_equilibrium(p, grid, **man.solver_opts)
        tag = reports.kappa_tag(k)
        reports.write_csv(man.out / f"beta_{tag}.csv", *reports.beta_table(prof, p, grid))
        reports.write_csv(man.out / f"metrics_{tag}.csv", *reports.metrics_table(prof, p, grid))
        reports.write_csv(man.out / f"profits_{tag}.csv", *reports.profits_table(prof, p, grid))
        diag += reports.diagnostics_rows(prof)
        log.info("kappa=%g: %s after %d iterations, defect %.3g", k, prof.status,
                 prof.iterations, prof.residual)
    reports.write_csv(man.out / "solver_diag.csv", ["kappa", "iteration", "residual"], diag)
    return EXIT_OK


def cmd_tables(man: RunManifest) -> int:
    grid = man.grid()
    reports.write_csv(man.out / "table1.csv", *reports.table1(man.params, grid, man.solver_opts))
    reports.write_csv(man.out / "table2.csv", *reports.table2(man.params, grid, man.solver_opts))
    return EXIT_OK


def cmd_figures(man: RunManifest) -> int:
    grid = man.grid()
    for name, builder in reports.FIGURES.items():
        reports.write_csv(man.out / f"{name}.csv", *builder(man.params, grid, man.solver_opts))
        log.info("wrote %s", name)
    return EXIT_OK


def cmd_simulate(man: RunManifest) -> int:
    grid = man.grid()
    all_ok = True
    for k in man.kappas:
        p = man.params.with_kappa(k)
        prof = solve_equilibrium(p, grid, **man.solver_opts)
        spec = SimulationSpec(man.n_paths, man.n_steps, man.seed, man.probes, workers=man.workers)
        batch = simulate_paths(prof, p, spec, grid)
        tag = reports.kappa_tag(k)
        reports.write_csv(man.out / f"mc_moments_{tag}.csv", *estimate_moments(batch).rows())
        checks = oracle_checks(batch, prof, p, grid)
        reports.write_csv(man.out / f"mc_checks_{tag}.csv",
                          ["check", "t", "estimate", "target", "tolerance", "passed"],
                          [(c.name, c.t, c.estimate, c.target, c.tolerance, c.passed) for c in checks])
        if man.dump_wealth:
            reports.write_csv(man.out / f"mc_wealth_{tag}.csv", ["w_insider", "w_mm", "w_noise"],
                              batch.wealth)
        bad = [c for c in checks if not c.passed]
        all_ok &= not bad
        print(f"kappa={tag}: {len(checks) - len(bad)}/{len(checks)} oracle checks passed")
        for c in bad:
            print(f"  FAIL {c.name} t={c.t:g}: estimate {c.estimate:.6g}, target {c.target:.6g},"
                  f" tolerance {c.tolerance:.3g}")
    return EXIT_OK if all_ok else EXIT_ORACLE


COMMANDS = {"solve": cmd_solve, "tables": cmd_tables, "figures": cmd_figures,
            "simulate": cmd_simulate}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        man = manifest_from_args(args)
        if man.command == "simulate" and (man.n_paths < 100 or man.n_steps < 100):
            raise ConfigError("simulate needs at least 100 paths and 100 steps")
        return COMMANDS[man.command](man)
    except (UsageError, ConfigError) as exc:
        print(f"kylefee: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, TargetUnreachableError, NonMonotoneBracketError,
            InconsistentCorrelationError) as exc:
        print(f"kylefee: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"kylefee: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
