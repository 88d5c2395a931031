"""Command-line benchmark driver.

Examples:

    oif-bench burgers --n 1600 --impl dopri5c --path both --repeats 30 \
        --csv burgers.csv
    oif-bench vdp --mu 1000 --impl dopri5c --path oif --repeats 1
    oif-bench rhs-micro --n 6400 --evals 10000

Each case prints one line per path and, with --path both, the
OIF-over-RAW runtime ratio.  CSV rows follow the schema
case,path,impl,param,mean_s,ci95_s,status.
"""

from __future__ import annotations

import argparse
import sys

from .problems import BurgersProblem, VdpProblem
from .runner import dump_solution, run_case, run_rhs_micro, write_csv


def _add_common(parser: argparse.ArgumentParser, default_steps: int) -> None:
    parser.add_argument("--impl", default="dopri5c",
                        help="implementation name (default: dopri5c)")
    parser.add_argument("--path", choices=("oif", "raw", "both"),
                        default="oif",
                        help="invoke via the mediator (oif), directly (raw), "
                             "or both")
    parser.add_argument("--repeats", type=int, default=30,
                        help="timed runs per case (default: 30)")
    parser.add_argument("--steps", type=int, default=default_steps,
                        help="integrate calls per run "
                             f"(default: {default_steps})")
    parser.add_argument("--reltol", type=float, default=1e-6)
    parser.add_argument("--abstol", type=float, default=1e-12)
    parser.add_argument("--csv", metavar="FILE",
                        help="append-free CSV output file")
    parser.add_argument("--dump-solution", metavar="FILE",
                        help="write the final solution vector, one value "
                             "per line")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oif-bench",
        description="Benchmark the IVP mediator library against direct "
                    "plugin calls.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_burgers = sub.add_parser("burgers",
                               help="periodic inviscid Burgers equation")
    p_burgers.add_argument("--n", type=int, default=200,
                           help="grid cells (default: 200)")
    p_burgers.add_argument("--t-final", type=float, default=2.0,
                           help="final time (default: 2.0)")
    _add_common(p_burgers, default_steps=100)

    p_vdp = sub.add_parser("vdp", help="Van der Pol oscillator")
    p_vdp.add_argument("--mu", type=float, default=1000.0,
                       help="damping parameter (default: 1000)")
    p_vdp.add_argument("--t-final", type=float, default=3000.0,
                       help="final time (default: 3000)")
    p_vdp.add_argument("--max-steps", type=int, default=500,
                       help="per-call step budget for dopri5 "
                            "(default: 500, matching common driver "
                            "defaults; 0 keeps the plugin default)")
    _add_common(p_vdp, default_steps=100)

    p_micro = sub.add_parser("rhs-micro",
                             help="time direct RHS evaluations only")
    p_micro.add_argument("--n", type=int, default=6400)
    p_micro.add_argument("--evals", type=int, default=10000)
    p_micro.add_argument("--repeats", type=int, default=30)
    p_micro.add_argument("--csv", metavar="FILE")
    return parser


def _report(result) -> None:
    if result.status == 0:
        print(f"{result.case} {result.path} {result.impl} "
              f"param={result.param}: {result.sample}")
    else:
        print(f"{result.case} {result.path} {result.impl} "
              f"param={result.param}: FAILED status={result.status} "
              f"({result.message})")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "rhs-micro":
        result = run_rhs_micro(args.n, args.evals, args.repeats)
        _report(result)
        if args.csv:
            write_csv(args.csv, [result])
        return 0

    if args.command == "burgers":
        problem = BurgersProblem(args.n, t_final=args.t_final)
        max_steps = None
    else:
        problem = VdpProblem(args.mu, t_final=args.t_final)
        max_steps = args.max_steps if args.max_steps > 0 else None
        if args.impl != "dopri5c":
            max_steps = None

    paths = ("oif", "raw") if args.path == "both" else (args.path,)
    results = []
    for path in paths:
        result = run_case(path, args.impl, problem, args.repeats,
                          steps=args.steps, reltol=args.reltol,
                          abstol=args.abstol, max_steps=max_steps)
        _report(result)
        results.append(result)

    if len(results) == 2 and all(r.status == 0 for r in results):
        by_path = {r.path: r.sample.mean for r in results}
        ratio = by_path["oif"] / by_path["raw"]
        print(f"overhead ratio mean(oif)/mean(raw) = {ratio:.4f}")

    if args.csv:
        write_csv(args.csv, results)
    if args.dump_solution:
        solved = [r for r in results if r.solution is not None]
        if not solved:
            print("no solution to dump (all runs failed)", file=sys.stderr)
            return 1
        dump_solution(args.dump_solution, solved[0].solution)

    return 0 if all(r.status == 0 for r in results) else 2


if __name__ == "__main__":
    raise SystemExit(main())
