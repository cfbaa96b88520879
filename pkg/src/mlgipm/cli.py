"""Command line entry point: ``bench``, ``solve-demo`` and ``convergence``."""
from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace

from .errors import InputError
from .harness import (FORMATS, BenchmarkConfig, convergence_study, render_report,
                      run_benchmark, write_report)
from .problems import EXACT, SQUARED
from .solver import SolverOptions, solve

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def parse_alpha_mode(text: str):
    """``ftb`` -> None, ``fixed:<a>`` -> a."""
    if text == "ftb":
        return None
    if text.startswith("fixed:"):
        try:
            return float(text[len("fixed:"):])
        except ValueError:
            pass
    raise argparse.ArgumentTypeError(f"alpha mode must be 'ftb' or 'fixed:<real>', got {text!r}")


def _problem_args(p):
    p.add_argument("--problem", choices=("p1", "p2"), default="p1")
    p.add_argument("--n", type=int, default=3)


def _solver_args(p):
    d = SolverOptions()
    p.add_argument("--tol", type=float, default=d.tol)
    p.add_argument("--tau", type=float, default=d.tau)
    p.add_argument("--sigma", type=float, default=d.sigma)
    p.add_argument("--mu0", type=float, default=d.mu0)
    p.add_argument("--max-iter", type=int, default=d.max_iter)
    p.add_argument("--perturb", type=float, default=0.0)
    p.add_argument("--alpha-mode", type=parse_alpha_mode, default=None)
    p.add_argument("--p1-norm", choices=(EXACT, SQUARED), default=SQUARED)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mlgipm", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("bench", help="seeded Monte Carlo benchmark")
    _problem_args(b)
    b.add_argument("--trials", type=int, default=100)
    b.add_argument("--seed", type=int, default=0)
    _solver_args(b)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--format", choices=FORMATS, default="csv")
    b.add_argument("--out", default="-")

    d = sub.add_parser("solve-demo", help="solve one instance and dump its iteration trace")
    _problem_args(d)
    d.add_argument("--seed", type=int, default=0)
    _solver_args(d)
    d.add_argument("--trace", default="-")

    c = sub.add_parser("convergence", help="estimate local convergence orders")
    _problem_args(c)
    c.add_argument("--seeds", type=int, default=20)
    c.add_argument("--seed", type=int, default=0)
    _solver_args(c)
    return parser


def _config(args, trials) -> BenchmarkConfig:
    opts = SolverOptions(tol=args.tol, tau=args.tau, sigma=args.sigma, mu0=args.mu0,
                         max_iter=args.max_iter, perturb_c=args.perturb,
                         alpha_fixed=args.alpha_mode, seed=args.seed)
    return BenchmarkConfig(problem=args.problem, n=args.n, trials=trials, seed=args.seed,
                           solver=opts, p1_norm=args.p1_norm,
                           workers=getattr(args, "workers", 1))


def _emit(text: str, path: str):
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def cmd_bench(args) -> int:
    config = _config(args, args.trials)
    results, stats = run_benchmark(config)
    if args.out == "-":
        sys.stdout.write(render_report(results, stats, args.format, config))
    else:
        write_report(results, stats, args.format, args.out, config)
    return EXIT_OK


def cmd_solve_demo(args) -> int:
    config = _config(args, 1)
    spec, X0 = config.build(args.seed)
    report = solve(spec, X0, replace(config.solver, seed=args.seed))
    _emit(report.to_json() + "\n", args.trace)
    print(f"{spec.name}: {report.status} after {report.iterations} iterations, "
          f"final error {report.final_error:.3e}", file=sys.stderr)
    return EXIT_OK


def _fmt(x):
    return "nan" if not math.isfinite(x) else f"{x:.3f}"


def cmd_convergence(args) -> int:
    config = _config(args, args.seeds)
    study = convergence_study(config)
    print(f"problem={args.problem} n={args.n} perturb={args.perturb:g} "
          f"alpha={config.solver.alpha_mode} expected={study.regime}")
    print("seed converged iterations q c full_steps in_band")
    for r in study.runs:
        print(f"{r.seed} {int(r.converged)} {r.iterations} {_fmt(r.q)} {_fmt(r.c)} "
              f"{int(r.full_steps)} {int(r.in_band)}")
    print(f"converged fraction {study.converged_fraction:.3f}; "
          f"{study.eligible} eligible runs; in-band fraction {_fmt(study.in_band_fraction)}")
    return EXIT_OK


COMMANDS = {"bench": cmd_bench, "solve-demo": cmd_solve_demo, "convergence": cmd_convergence}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"mlgipm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        print(f"mlgipm: runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
