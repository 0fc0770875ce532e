"""Command-line entry point.

Subcommands: verify (structural checks, exit 0/1), simulate (run a scenario,
write the ledger and snapshots), convergence (step-halving and azimuthal
refinement study).  Exit codes: 0 success, 1 runtime or verification
failure, 2 usage/config errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .config import RunConfig, default_config, load_config
from .coupling import check_power_balance, check_transpose_identity
from .dirac import check_adjointness, check_dirac_pairing, \
    operator_norm_bound_check
from .driver import azimuthal_refinement_gap, build_problem, convergence_study, \
    make_simulation, write_convergence_csv
from .errors import PhmixError, StepFailureError
from .simulate import build_scenario


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else default_config()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.output is not None:
        cfg = replace(cfg, output_dir=args.output)
    return cfg


def cmd_verify(args) -> int:
    try:
        cfg = _load(args)
        problem = build_problem(cfg)
    except PhmixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    trials = args.trials if args.trials is not None else 200
    ops = problem.ops
    reports = [
        check_adjointness(ops, trials, cfg.seed),
        operator_norm_bound_check(ops, trials, cfg.seed),
        check_dirac_pairing(ops, trials, cfg.seed),
        check_transpose_identity(ops),
        check_power_balance(ops, trials, cfg.seed),
    ]
    for rep in reports:
        print("\n".join(rep.lines()))
        print()
    failed = [rep.name for rep in reports if not rep.passed]
    if failed:
        print(f"verify: FAIL ({', '.join(failed)})")
        return 1
    print("verify: PASS")
    return 0


def cmd_simulate(args) -> int:
    try:
        cfg = _load(args)
        problem = build_problem(cfg)
        setup = build_scenario(cfg.scenario, problem.heat, problem.fluid,
                               cfg.scenario_params)
        sim = make_simulation(problem, cfg, setup)
        os.makedirs(cfg.output_dir, exist_ok=True)
    except PhmixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        result = sim.run(setup, cfg.output_dir)
    except StepFailureError as exc:
        ledger = getattr(exc, "ledger", None)
        if ledger is not None and len(ledger):
            print(f"last ledger row: {ledger.records[-1].csv_row()}",
                  file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PhmixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    led = result.ledger
    total = led.column("total")
    print(f"scenario: {cfg.scenario}")
    print(f"steps: {result.steps}")
    print(f"energy_total_initial: {float(total[0])!r}")
    print(f"energy_total_final: {float(total[-1])!r}")
    print(f"energy_drift: {float(total[-1] - total[0])!r}")
    print(f"max_coupling_residual: "
          f"{float(abs(led.column('P_couple_residual')).max())!r}")
    print(f"newton_iterations: {result.newton_iterations}")
    print(f"ledger: {os.path.join(cfg.output_dir, cfg.scenario + '_ledger.csv')}")
    return 0


def cmd_convergence(args) -> int:
    try:
        cfg = _load(args)
    except PhmixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        rows = convergence_study(cfg)
        gap = azimuthal_refinement_gap(cfg)
    except StepFailureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PhmixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    os.makedirs(cfg.output_dir, exist_ok=True)
    path = os.path.join(cfg.output_dir, "convergence.csv")
    write_convergence_csv(rows, path)
    for row in rows:
        order = "-" if row.observed_order is None else f"{row.observed_order:.3f}"
        print(f"dt={row.dt:.6e} steps={row.steps} "
              f"drift_per_time={row.drift_per_time:.6e} order={order}")
    print(f"azimuthal_refinement_gap: {gap:.3e} "
          f"({'PASS' if gap <= 1e-12 else 'FAIL'})")
    print(f"report: {path}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="phmix",
        description="Mixed-dimensional coupling of a heat-conducting solid "
                    "and a 1D coolant channel: structural verification and "
                    "coupled simulation.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, desc in (
            ("verify", cmd_verify,
             "run the structural checks (adjointness, norm bound, pairing, "
             "transpose, power balance)"),
            ("simulate", cmd_simulate,
             "integrate a scenario and write ledger + snapshots"),
            ("convergence", cmd_convergence,
             "step-halving and azimuthal refinement study")):
        sp = sub.add_parser(name, help=desc)
        sp.add_argument("--config", help="JSON config file (defaults built in)")
        sp.add_argument("--output", help="output directory override")
        sp.add_argument("--seed", type=int, help="seed override")
        sp.add_argument("--trials", type=int,
                        help="random trials for verification checks")
        sp.set_defaults(func=fn)
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
