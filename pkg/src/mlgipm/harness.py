"""Seeded Monte Carlo benchmark runner, summary statistics and report writers."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import InputError
from .problems import EXACT, SQUARED, build_p1, build_p2
from .solver import SolverOptions, estimate_convergence_order, solve
from .stats import chi_square_cramers_v, cohens_d, two_proportion_z, wilcoxon_rank_sum

PROBLEMS = ("p1", "p2")
FORMATS = ("csv", "md", "json")
COLUMNS = (
    "Time(s) Median",
    "Time(s) Mean±SD",
    "Iterations Median",
    "Iterations Mean±SD",
    "Success Rate",
    "Error Mean±SD",
)
TIME_COLUMNS = COLUMNS[:2]


@dataclass(frozen=True)
class BenchmarkConfig:
    problem: str = "p1"
    n: int = 3
    trials: int = 100
    seed: int = 0
    solver: SolverOptions = field(default_factory=SolverOptions)
    p1_norm: str = SQUARED
    workers: int = 1

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise InputError(f"problem must be one of {PROBLEMS}, got {self.problem!r}")
        if self.trials < 1:
            raise InputError("trials must be at least 1")
        if self.n < 2:
            raise InputError("group size n must be at least 2")
        if self.p1_norm not in (EXACT, SQUARED):
            raise InputError(f"p1 norm must be {EXACT!r} or {SQUARED!r}")
        if self.workers < 1:
            raise InputError("workers must be at least 1")

    def build(self, seed: int):
        if self.problem == "p1":
            return build_p1(self.n, seed, self.p1_norm)
        return build_p2(self.n, seed)


@dataclass
class TrialResult:
    seed: int
    success: bool
    time: float
    iterations: int
    final_error: float
    reason: str = ""
    order: float = math.nan


def run_trial(config: BenchmarkConfig, index: int, keep_report: bool = False):
    """Build and solve trial ``index``; every failure is captured, never raised.

    With ``keep_report`` the solver report (or None) is returned alongside.
    """
    seed = config.seed + index
    opts = config.solver
    report = None
    t0 = time.perf_counter()
    try:
        spec, X0 = config.build(seed)
        # per-trial perturbation stream
        report = solve(spec, X0, replace(opts, seed=seed))
    except Exception as exc:  # sampling or model failures end up as a failed trial
        elapsed = time.perf_counter() - t0
        res = TrialResult(seed, False, elapsed, 0, math.nan, f"{type(exc).__name__}: {exc}")
        return (res, None) if keep_report else res
    elapsed = time.perf_counter() - t0
    success = report.converged and report.final_error <= opts.tol
    reason = "" if success else (report.message or report.status)
    est = estimate_convergence_order(report)
    res = TrialResult(seed, bool(success), elapsed, int(report.iterations),
                      float(report.final_error), reason, est.q if est.ok else math.nan)
    return (res, report) if keep_report else res


def _sd(x: np.ndarray) -> float:
    if x.size == 0:
        return math.nan
    return float(np.std(x, ddof=1)) if x.size > 1 else 0.0


def _mean(x: np.ndarray) -> float:
    return float(np.mean(x)) if x.size else math.nan


def _median(x: np.ndarray) -> float:
    return float(np.median(x)) if x.size else math.nan


@dataclass
class SummaryStats:
    trials: int
    successes: int
    time_median: float
    time_mean: float
    time_sd: float
    iter_median: float
    iter_mean: float
    iter_sd: float
    error_mean: float
    error_sd: float

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials

    @classmethod
    def from_results(cls, results) -> "SummaryStats":
        """Time and iterations over all trials, error over successful trials only."""
        if not results:
            raise InputError("no trial results to summarize")
        t = np.array([r.time for r in results], dtype=float)
        it = np.array([r.iterations for r in results], dtype=float)
        err = np.array([r.final_error for r in results if r.success], dtype=float)
        return cls(len(results), sum(1 for r in results if r.success),
                   _median(t), _mean(t), _sd(t),
                   _median(it), _mean(it), _sd(it),
                   _mean(err), _sd(err))

    def row(self) -> dict:
        return {
            "Time(s) Median": f"{self.time_median:.4f}",
            "Time(s) Mean±SD": f"{self.time_mean:.4f} ± {self.time_sd:.4f}",
            "Iterations Median": f"{self.iter_median:.2f}",
            "Iterations Mean±SD": f"{self.iter_mean:.2f} ± {self.iter_sd:.2f}",
            "Success Rate": f"{self.success_rate:.3f}",
            "Error Mean±SD": f"{self.error_mean:.3e} ± {self.error_sd:.3e}",
        }


def run_benchmark(config: BenchmarkConfig):
    """All trials of ``config`` and their summary, ordered by trial index."""
    idx = range(config.trials)
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(run_trial, [config] * config.trials, idx))
    else:
        results = [run_trial(config, i) for i in idx]
    return results, SummaryStats.from_results(results)


# ------------------------------------------------------------------ reports

def render_csv(stats: SummaryStats) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    w.writeheader()
    w.writerow(stats.row())
    return buf.getvalue()


def render_markdown(stats: SummaryStats) -> str:
    row = stats.row()
    lines = ["| " + " | ".join(COLUMNS) + " |",
             "|" + "|".join("---" for _ in COLUMNS) + "|",
             "| " + " | ".join(row[c] for c in COLUMNS) + " |"]
    return "\n".join(lines) + "\n"


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def render_json(results, stats: SummaryStats, config: Optional[BenchmarkConfig] = None) -> str:
    tree = {"summary": stats.row(),
            "trials": [{k: _clean(v) for k, v in asdict(r).items()} for r in results]}
    if config is not None:
        c = asdict(config)
        c["solver"].pop("matfun", None)
        c["solver"]["sigma_bounds"] = list(c["solver"]["sigma_bounds"])
        tree["config"] = c
    return json.dumps(tree, indent=2, ensure_ascii=False) + "\n"


def render_report(results, stats: SummaryStats, fmt: str, config=None) -> str:
    if fmt == "csv":
        return render_csv(stats)
    if fmt == "md":
        return render_markdown(stats)
    if fmt == "json":
        return render_json(results, stats, config)
    raise InputError(f"format must be one of {FORMATS}, got {fmt!r}")


def write_report(results, stats: SummaryStats, fmt: str, path, config=None) -> str:
    """Write the report to ``path`` (UTF-8, no newline translation) and return its text."""
    text = render_report(results, stats, fmt, config)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return text


def csv_roundtrip(text: str) -> str:
    rows = list(csv.reader(io.StringIO(text, newline="")))
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL).writerows(rows)
    return buf.getvalue()


# --------------------------------------------------------------- comparison

@dataclass
class Comparison:
    success: tuple
    proportion_z: float
    proportion_p: float
    cramers_v: float
    time_rank_sum_p: float
    iterations_rank_sum_p: float
    time_d: float
    iterations_d: float


def compare(results_a, results_b) -> Comparison:
    """Significance and effect size between two configurations' trials."""
    sa = sum(r.success for r in results_a)
    sb = sum(r.success for r in results_b)
    na, nb = len(results_a), len(results_b)
    z = two_proportion_z(sa, na, sb, nb)
    chi = chi_square_cramers_v([[sa, na - sa], [sb, nb - sb]])
    ta = [r.time for r in results_a]
    tb = [r.time for r in results_b]
    ia = [r.iterations for r in results_a]
    ib = [r.iterations for r in results_b]

    def d(a, b):
        if len(a) < 2 or len(b) < 2:
            return math.nan
        e = cohens_d(a, b)
        return math.nan if e.undefined else e.d

    return Comparison((sa, na, sb, nb), z.Z, z.p, chi.V,
                      wilcoxon_rank_sum(ta, tb).p, wilcoxon_rank_sum(ia, ib).p,
                      d(ta, tb), d(ia, ib))


# --------------------------------------------------------- convergence study

QUADRATIC = "quadratic"
LINEAR = "linear"


@dataclass
class OrderRun:
    seed: int
    converged: bool
    iterations: int
    q: float
    c: float
    full_steps: bool      # final three steps all took alpha = tau
    eligible: bool
    in_band: bool


@dataclass
class OrderStudy:
    regime: str
    runs: list
    converged_fraction: float
    eligible: int
    in_band_fraction: float


def expected_regime(opts: SolverOptions) -> str:
    """Quadratic for exact full Newton steps, linear when perturbed or damped."""
    return LINEAR if (opts.perturb_c > 0 or opts.alpha_fixed is not None) else QUADRATIC


def _full_steps(report, tau: float, count: int = 3) -> bool:
    alphas = [r.alpha for r in report.trace[1:]]
    if len(alphas) < count:
        return False
    return all(a is not None and abs(a - tau) <= 1e-12 for a in alphas[-count:])


def convergence_study(config: BenchmarkConfig, q_min: float = 1.7,
                      linear_band: tuple = (0.8, 1.3)) -> OrderStudy:
    """Fit the local order on every trial and score it against the expected regime."""
    opts = config.solver
    regime = expected_regime(opts)
    runs = []
    for i in range(config.trials):
        res, report = run_trial(config, i, keep_report=True)
        if report is None or not res.success:
            runs.append(OrderRun(res.seed, False, res.iterations, math.nan, math.nan,
                                 False, False, False))
            continue
        est = estimate_convergence_order(report)
        full = _full_steps(report, opts.tau)
        if regime == QUADRATIC:
            eligible = full and est.ok
            in_band = eligible and est.q >= q_min
        else:
            eligible = True
            in_band = est.ok and linear_band[0] <= est.q <= linear_band[1] and est.c < 1.0
        runs.append(OrderRun(res.seed, True, res.iterations, est.q, est.c, full, eligible, in_band))
    conv = sum(r.converged for r in runs)
    elig = [r for r in runs if r.eligible]
    frac = sum(r.in_band for r in elig) / len(elig) if elig else math.nan
    return OrderStudy(regime, runs, conv / len(runs), len(elig), frac)
