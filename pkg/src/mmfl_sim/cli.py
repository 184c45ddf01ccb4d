"""Command-line entry point: ``mmfl-sim <command> [options]``.

Exit codes: 0 success, 1 selector/oracle mismatch, 2 invalid input.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import report
from .config import SimulationConfig, load_config
from .domain import ConfigurationError, profiles_to_records
from .experiments import compare, sweep_alpha
from .scenario import default_profiles
from .selection import (MAX_BRUTE_FORCE_VARIABLES, random_instance,
                        solve_brute_force, solve_exact)
from .simengine import run_simulation

logger = logging.getLogger("mmfl_sim")


def _load(args) -> SimulationConfig:
    return load_config(args.config) if args.config else SimulationConfig()


def _seeds(args) -> Optional[List[int]]:
    return None if args.seed is None else [args.seed]


def cmd_run(args) -> int:
    cfg = _load(args)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    result = run_simulation(cfg)
    out = Path(args.out)
    header, rows = report.round_table(result)
    report.write_csv(out / "rounds.csv", header, rows)
    report.write_json(out / "summary.json", result.summary())
    for mid, t in result.time_to_accuracy.items():
        print(f"{mid}: time_to_accuracy={report.fmt(t) or 'unreached'} "
              f"final_accuracy={report.fmt(result.final_accuracy[mid])}")
    return 0


def cmd_compare(args) -> int:
    cfg = _load(args)
    names = [a.strip() for a in args.arms.split(",") if a.strip()] if args.arms else None
    cmp = compare(cfg, names, _seeds(args))
    header, rows = report.comparison_table(cmp)
    report.write_csv(Path(args.out) / "comparison.csv", header, rows)
    for arm in cmp.arms:
        speedups = ", ".join(f"{mid}={report.fmt(cmp.median_speedup(arm.name, mid))}"
                             for mid in cmp.model_ids)
        print(f"{arm.name}: median speedup of flammable {speedups}; "
              f"mean idle fraction {report.fmt(cmp.mean_idle(arm.name))}")
    return 0


def cmd_sweep_alpha(args) -> int:
    cfg = _load(args)
    sweep = sweep_alpha(cfg, _seeds(args))
    header, rows = report.sweep_table(sweep)
    report.write_csv(Path(args.out) / "alpha_sweep.csv", header, rows)
    for a in sweep.alphas:
        cells = ", ".join(f"{mid}: time={report.fmt(sweep.median_time(a, mid))} "
                          f"acc={report.fmt(sweep.median_accuracy(a, mid))}"
                          for mid in sweep.model_ids)
        print(f"alpha={report.fmt(a)}: {cells}")
    return 0


def cmd_validate_selector(args) -> int:
    if args.instances < 1 or args.max_clients < 1 or args.max_models < 1:
        raise ConfigurationError("--instances, --max-clients and --max-models must be >= 1")
    if args.max_clients * args.max_models > MAX_BRUTE_FORCE_VARIABLES:
        raise ConfigurationError(
            f"--max-clients x --max-models must not exceed {MAX_BRUTE_FORCE_VARIABLES} "
            "(brute-force oracle limit)")
    rng = np.random.default_rng(0 if args.seed is None else args.seed)
    rows = []
    mismatches = 0
    for k in range(args.instances):
        n = int(rng.integers(1, args.max_clients + 1))
        m = int(rng.integers(1, args.max_models + 1))
        inst = random_instance(rng, n, m)
        exact = solve_exact(inst).objective
        oracle = solve_brute_force(inst).objective
        equal = exact == oracle
        mismatches += not equal
        rows.append([k, n, m, report.fmt_objective(exact), report.fmt_objective(oracle), equal])
    report.write_csv(Path(args.out) / "oracle.csv", report.ORACLE_COLUMNS, rows)
    print(f"{args.instances - mismatches}/{args.instances} instances match the oracle")
    return 1 if mismatches else 0


def cmd_gen_profiles(args) -> int:
    cfg = _load(args)
    profiles = default_profiles([m.model_id for m in cfg.models])
    path = Path(args.out) / "profiles.json"
    report.write_json(path, profiles_to_records(profiles))
    print(f"wrote {path}")
    return 0


COMMANDS = {
    "run": (cmd_run, "run one simulation; writes rounds.csv and summary.json"),
    "compare": (cmd_compare, "run every arm over every seed; writes comparison.csv"),
    "validate-selector": (cmd_validate_selector,
                          "check the exact selector against brute force; writes oracle.csv"),
    "sweep-alpha": (cmd_sweep_alpha, "vary the exploration weight; writes alpha_sweep.csv"),
    "gen-profiles": (cmd_gen_profiles, "write the default device profiles as JSON"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmfl-sim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", metavar="PATH", help="JSON configuration (defaults if omitted)")
        p.add_argument("--seed", type=int, metavar="N",
                       help="seed (compare/sweep-alpha: run only this seed)")
        p.add_argument("--out", metavar="DIR", default=".", help="output directory")
        if name == "compare":
            p.add_argument("--arms", metavar="LIST",
                           help="comma-separated arm names (default: the config's arms)")
        if name == "validate-selector":
            p.add_argument("--instances", type=int, default=1000, metavar="N")
            p.add_argument("--max-clients", type=int, default=5, metavar="N")
            p.add_argument("--max-models", type=int, default=3, metavar="N")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is not None and args.seed < 0:
        print("error: --seed must be nonnegative", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command][0](args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
