"""Command line entry point: ``eda run``, ``eda bisect`` and ``eda sweep``.

Exit status is 0 when the command completes, 2 when a bisection reaches the
population cap without a reliable size, and 1 on usage errors.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from . import harness
from .bayesnet import dump_model
from .iboa import STRATEGIES, IboaConfig, run_iboa_store
from .problems import PROBLEM_NAMES, make_problem

EXIT_OK, EXIT_USAGE, EXIT_UNSOLVABLE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _n_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("n-list needs positive integers")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eda", description="Incremental BOA and baseline EDAs on trap problems.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--alg", required=True, choices=harness.ALGORITHMS)
        p.add_argument("--problem", required=True, choices=PROBLEM_NAMES)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--k", type=_positive, default=4, help="tournament size (iboa, boa)")
        p.add_argument("--strategy", default="periodic", choices=STRATEGIES + ("periodic-structure",))
        p.add_argument("--max-gens", type=_positive, default=None)

    run = sub.add_parser("run", help="a single run")
    common(run)
    run.add_argument("--n", type=_positive, required=True)
    run.add_argument("--pop", type=_positive, required=True)
    run.add_argument("--trace", action="store_true", help="print iteration, best fitness, edges")
    run.add_argument("--dump-model", metavar="PATH", default=None)

    bisect = sub.add_parser("bisect", help="minimum reliable population size")
    common(bisect)
    bisect.add_argument("--n", type=_positive, required=True)

    sweep = sub.add_parser("sweep", help="bisections over several sizes and a power-law fit")
    common(sweep)
    sweep.add_argument("--n-list", type=_n_list, required=True)
    sweep.add_argument("--reps", type=_positive, default=10)
    sweep.add_argument("--out", default=None, help="CSV path (default: stdout)")
    return parser


def _options(args) -> dict:
    opts = {"k": args.k, "max_gens": args.max_gens}
    if args.alg == "iboa":
        opts["strategy"] = args.strategy
    return opts


def _run(args) -> int:
    problem = make_problem(args.problem, args.n)
    trace = None
    if args.trace:
        print("iteration best_fitness edges")

        def trace(it, best, edges):
            print(f"{it} {best:g} {edges}")

    if args.alg == "iboa":
        cfg = IboaConfig(problem.n, args.pop, k=args.k, strategy=args.strategy,
                         max_generations=args.max_gens, seed=args.seed)
        result, store = run_iboa_store(cfg, problem, trace)
        dump = store.dump
    else:
        result = harness.get_runner(args.alg)(problem, args.pop, args.seed, trace=trace, **_options(args))
        dump = None if result.model is None else lambda: dump_model(result.model)
    print(f"success={str(result.success).lower()}")
    print(f"evaluations={result.evaluations}")
    print(f"generations={result.generations_used:g}")
    print(f"best_fitness={result.best_fitness:g}")
    print(f"edges={result.final_structure.num_edges()}")
    if args.dump_model:
        if dump is None:
            print(f"eda: error: {args.alg} keeps no Bayesian network to dump", file=sys.stderr)
            return EXIT_USAGE
        with open(args.dump_model, "w") as fh:
            fh.write(dump())
    return EXIT_OK


def _bisect(args) -> int:
    problem = make_problem(args.problem, args.n)
    b = harness.bisect_population(args.alg, problem, seed=args.seed, **_options(args))
    harness.write_csv([b], sys.stdout)
    if not b.solved:
        print(f"unsolvable at cap N={harness.N_CAP}", file=sys.stderr)
        return EXIT_UNSOLVABLE
    print(f"N_min={b.N_min} mean_evaluations={b.mean_evaluations:.1f}", file=sys.stderr)
    return EXIT_OK


def _sweep(args) -> int:
    for n in args.n_list:
        make_problem(args.problem, n)
    result = harness.scaling_sweep(args.alg, args.problem, args.n_list, repetitions=args.reps,
                                   seed=args.seed, **_options(args))
    rows = [b for n in args.n_list for b in result.bisections.get(n, [])]
    if args.out:
        with open(args.out, "w", newline="") as fh:
            harness.write_csv(rows, fh)
    else:
        harness.write_csv(rows, sys.stdout)
    if result.unsolved():
        print("unsolvable at cap for n=" + ",".join(map(str, result.unsolved())), file=sys.stderr)
        return EXIT_UNSOLVABLE
    if result.exponent is None:
        print("exponent: not fitted (need three sizes)", file=sys.stderr)
    else:
        print(f"exponent: {result.exponent:.2f}", file=sys.stderr)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _run(args)
        if args.command == "bisect":
            return _bisect(args)
        return _sweep(args)
    except ValueError as exc:
        print(f"eda: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
