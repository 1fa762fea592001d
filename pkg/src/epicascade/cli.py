"""Command-line entry point.

Exit codes: 0 success, 1 property failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .cascade import final_adopters, largest_cohesive_subset, simulate
from .epistemics import is_epistemically_fair
from .errors import EpicascadeError
from .scenario import (
    CLOSED_LOOP,
    OPEN_LOOP,
    export_results,
    generate_comparative,
    generate_data_driven,
    load_scenario,
    run_scenario,
    write_scenario,
)
from .verify import SUITES, run_suite

EXIT_OK, EXIT_PROPERTY, EXIT_USAGE = 0, 1, 2


def _fmt(s) -> str:
    return "{" + ", ".join(str(x) for x in sorted(s)) + "}"


def _formats(args):
    return ("csv", "json") if args.format is None else (args.format,)


def _load(path, mode):
    sc = load_scenario(path)
    if sc.mode != mode:
        raise EpicascadeError(f"scenario run.mode is {sc.mode!r}; this command needs {mode!r}")
    return sc


def cmd_simulate(args) -> int:
    sc = _load(args.scenario, OPEN_LOOP)
    traj, _ = run_scenario(sc)
    if args.out:
        export_results(traj, None, args.out, _formats(args))
    print(f"S** = {_fmt(traj.s_star_star)}")
    print(f"t_fixed = {traj.t_fixed if traj.t_fixed is not None else 'not reached'}")
    return EXIT_OK


def cmd_control(args) -> int:
    sc = _load(args.scenario, CLOSED_LOOP)
    traj, metrics = run_scenario(sc)
    if args.out:
        export_results(traj, metrics, args.out, _formats(args))
    print(f"C = {metrics.C:.6g}  C_bar = {metrics.C_bar:.6g}")
    if metrics.t_star_star is None:
        print(f"t** = not reached within t_max = {traj.final_time}")
    else:
        print(f"t** = {metrics.t_star_star}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    sc = load_scenario(args.scenario)
    g, m, rho, seeds = sc.network, sc.credibility, sc.thresholds, sc.seeds
    core = largest_cohesive_subset(g, m, rho, frozenset(range(sc.n)) - seeds)
    predicted = final_adopters(g, m, rho, seeds)
    simulated = simulate(g, m, rho, seeds).s_star_star
    print(f"M (largest cohesive subset of non-seeds) = {_fmt(core)}")
    print(f"predicted S** = {_fmt(predicted)}")
    print(f"simulated S** = {_fmt(simulated)}")
    print(f"epistemically fair: {'yes' if is_epistemically_fair(m, sc.agents) else 'no'}")
    if predicted != simulated:
        print("MISMATCH between cohesive-set prediction and simulation", file=sys.stderr)
        return EXIT_PROPERTY
    print("prediction matches simulation")
    return EXIT_OK


def cmd_verify(args) -> int:
    report = run_suite(args.suite, args.trials, args.seed, args.workers)
    print(report.summary())
    if report.passed:
        return EXIT_OK
    out = Path(args.out or "counterexamples")
    out.mkdir(parents=True, exist_ok=True)
    for f in report.failures:
        path = out / f"{args.suite}_seed{args.seed}_trial{f.trial}{f.suffix}"
        path.write_text(f.counterexample, encoding="utf-8", newline="\n")
        print(f"trial {f.trial}: {f.message}")
        print(f"  counterexample written to {path}")
    return EXIT_PROPERTY


def cmd_generate(args) -> int:
    if args.kind == "comparative":
        sc = generate_comparative(args.id, args.seed)
    else:
        sc = generate_data_driven(args.agent_file, args.seed, jitter=args.jitter)
    path = write_scenario(sc, args.out)
    print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epicascade",
        description="Epistemic linear threshold cascades and LQR nudging policies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the open-loop cascade")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"])
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("control", help="run the closed-loop receding-horizon policy")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"])
    p.set_defaults(func=cmd_control)

    p = sub.add_parser("analyze", help="cohesive-set steady-state analysis")
    p.add_argument("--scenario", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify", help="run a randomised property suite")
    p.add_argument("--suite", required=True, choices=sorted(SUITES))
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: $EPICASCADE_WORKERS or CPU count)")
    p.add_argument("--out", help="directory for counterexample files")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("generate", help="write a generated scenario file")
    p.add_argument("kind", choices=["comparative", "data-driven"])
    p.add_argument("--id", type=int, choices=[1, 2, 3], default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--agent-file")
    p.add_argument("--jitter", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (EpicascadeError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
