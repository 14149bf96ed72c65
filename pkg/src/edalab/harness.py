"""Population sizing by bisection, scaling sweeps and power-law fits.

Every run seed is derived from the master seed through a ``SeedSequence``
whose spawn key is ``(n, rep, N, phase, run_index)``. A run's stream
therefore depends only on its own coordinates, and adding runs or
repetitions never changes the runs that already exist.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .baselines import run_cga, run_dtree_eda, run_pbil
from .boa import BoaConfig, run_boa
from .iboa import IboaConfig, run_iboa
from .problems import Problem, make_problem
from .result import RunResult

ALGORITHMS = ("iboa", "boa", "pbil", "cga", "dtree")
CSV_HEADER = ("algorithm", "problem", "n", "rep", "N_min", "run_index", "evaluations", "success")

N_START = 16
N_CAP = 2 ** 22
RUNS = 10
RATIO = 1.1

# phase part of the spawn key
_PROBE, _VALIDATE = 0, 1

Runner = Callable[..., RunResult]


def _iboa(problem, N, seed, k=4, strategy="periodic", max_gens=None, trace=None):
    cfg = IboaConfig(problem.n, N, k=k, strategy=strategy, max_generations=max_gens, seed=seed)
    return run_iboa(cfg, problem, trace)


def _boa(problem, N, seed, k=4, max_gens=None, trace=None, **_):
    cfg = BoaConfig(problem.n, N, tournament_size=k, max_generations=max_gens, seed=seed)
    return run_boa(cfg, problem, trace)


def _iteration_cap(N, max_gens):
    return None if max_gens is None else max_gens * N


def _pbil(problem, N, seed, max_gens=None, trace=None, **_):
    return run_pbil(problem, N=N, max_iterations=_iteration_cap(N, max_gens), seed=seed, trace=trace)


def _cga(problem, N, seed, max_gens=None, trace=None, **_):
    return run_cga(problem, N, max_iterations=_iteration_cap(N, max_gens), seed=seed, trace=trace)


def _dtree(problem, N, seed, max_gens=None, trace=None, **_):
    return run_dtree_eda(problem, N=N, max_iterations=_iteration_cap(N, max_gens), seed=seed, trace=trace)


RUNNERS: dict[str, Runner] = {"iboa": _iboa, "boa": _boa, "pbil": _pbil, "cga": _cga, "dtree": _dtree}


def get_runner(algorithm: str) -> Runner:
    try:
        return RUNNERS[algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}") from None


def run_seed(master: int, n: int, rep: int, N: int, phase: int, run_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master, spawn_key=(n, rep, N, phase, run_index))


@dataclass(frozen=True)
class ExperimentRecord:
    run_index: int
    evaluations: int
    success: bool


@dataclass
class BisectionResult:
    algorithm: str
    problem: str
    n: int
    rep: int
    N_min: Optional[int]
    evaluations_per_success: list[int]
    last_failure: Optional[int] = None
    # every (N, successes, runs attempted) batch, in the order run
    probes: list[tuple[int, int, int]] = field(default_factory=list)
    records: list[ExperimentRecord] = field(default_factory=list)

    @property
    def solved(self) -> bool:
        return self.N_min is not None

    @property
    def mean_evaluations(self) -> float:
        if not self.evaluations_per_success:
            return math.nan
        return float(np.mean(self.evaluations_per_success))


def bisect_population(algorithm: str, problem: Problem | str, n: Optional[int] = None, seed: int = 0,
                      rep: int = 0, runs: int = RUNS, n_start: int = N_START, n_cap: int = N_CAP,
                      ratio: float = RATIO, runner: Optional[Runner] = None,
                      **options) -> BisectionResult:
    """Smallest N giving ``runs`` successes out of ``runs``.

    Doubles N from ``n_start`` until a batch fully succeeds (giving up past
    ``n_cap``), halves the gap to the last failing size until the two differ
    by at most ``ratio``, then confirms the answer with a fresh batch. A
    confirmation failure raises N by ``ratio`` and tries again. Every batch
    stops at its first failed run.
    """
    if isinstance(problem, str):
        if n is None:
            raise ValueError("n is required with a problem name")
        problem = make_problem(problem, n)
    n = problem.n
    run = runner or get_runner(algorithm)
    result = BisectionResult(algorithm, problem.name, n, rep, None, [])

    def batch(N: int, phase: int) -> list[ExperimentRecord]:
        out = []
        for i in range(runs):
            r = run(problem, N, run_seed(seed, n, rep, N, phase, i), **options)
            out.append(ExperimentRecord(i, int(r.evaluations), bool(r.success)))
            if not r.success:
                break
        result.probes.append((N, sum(x.success for x in out), len(out)))
        return out

    def passed(records):
        return len(records) == runs and all(x.success for x in records)

    N = n_start
    fail = None
    while not passed(batch(N, _PROBE)):
        fail = N
        if N >= n_cap:
            result.last_failure = fail
            return result
        N = min(2 * N, n_cap)

    lo, hi = fail, N
    if lo is not None:
        while hi / lo > ratio:
            mid = (lo + hi) // 2
            if passed(batch(mid, _PROBE)):
                hi = mid
            else:
                lo = mid
    fail = lo

    N = hi
    while True:
        records = batch(N, _VALIDATE)
        if passed(records):
            break
        fail = N
        if N >= n_cap:
            result.last_failure = fail
            return result
        N = min(max(N + 1, math.ceil(N * ratio)), n_cap)

    result.N_min = N
    result.last_failure = fail
    result.records = records
    result.evaluations_per_success = [x.evaluations for x in records]
    return result


def fit_exponent(points: Iterable[tuple[float, float]]) -> tuple[float, float]:
    """Least-squares line through ``(log n, log evaluations)``: returns (slope, intercept)."""
    pts = np.asarray(list(points), dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 3 or pts.shape[1] != 2:
        raise ValueError("need at least three (n, evaluations) points")
    if np.unique(pts[:, 0]).size < 3:
        raise ValueError("need at least three distinct problem sizes")
    if np.any(pts <= 0):
        raise ValueError("power-law fit needs positive sizes and evaluation counts")
    slope, intercept = np.polyfit(np.log(pts[:, 0]), np.log(pts[:, 1]), 1)
    return float(slope), float(intercept)


@dataclass
class ScalingResult:
    algorithm: str
    problem: str
    bisections: dict[int, list[BisectionResult]]
    exponent: Optional[float] = None
    intercept: Optional[float] = None

    def mean_evaluations(self) -> dict[int, float]:
        """Mean over every successful validation run, per solved problem size."""
        out = {}
        for n, results in self.bisections.items():
            if results and all(b.solved for b in results):
                out[n] = float(np.mean([e for b in results for e in b.evaluations_per_success]))
        return out

    def unsolved(self) -> list[int]:
        return [n for n, results in self.bisections.items() if not all(b.solved for b in results)]


def scaling_sweep(algorithm: str, problem: str, n_list: Sequence[int], repetitions: int = 10,
                  seed: int = 0, stop_on_unsolvable: bool = False,
                  progress: Optional[Callable[[BisectionResult], None]] = None,
                  **options) -> ScalingResult:
    """Repeated bisections per problem size and a power-law fit of the means.

    A size whose bisection hits the cap is reported unsolved and its
    remaining repetitions are skipped. With ``stop_on_unsolvable`` the sweep
    also skips every later size. The exponent is only fitted when every
    size is solved.
    """
    sizes = [make_problem(problem, n) for n in n_list]
    out = ScalingResult(algorithm, problem, {})
    for prob in sizes:
        results = out.bisections.setdefault(prob.n, [])
        for rep in range(repetitions):
            b = bisect_population(algorithm, prob, seed=seed, rep=rep, **options)
            results.append(b)
            if progress:
                progress(b)
            if not b.solved:
                break
        if stop_on_unsolvable and out.unsolved():
            break
    means = out.mean_evaluations()
    if not out.unsolved() and len(means) >= 3:
        out.exponent, out.intercept = fit_exponent(sorted(means.items()))
    return out


def csv_rows(results: Iterable[BisectionResult]) -> list[tuple]:
    """One row per validation run; an unsolved bisection gives one row with blanks."""
    rows = []
    for b in results:
        if not b.solved:
            rows.append((b.algorithm, b.problem, b.n, b.rep, "", "", "", 0))
            continue
        for r in b.records:
            rows.append((b.algorithm, b.problem, b.n, b.rep, b.N_min, r.run_index, r.evaluations, int(r.success)))
    return rows


def write_csv(results: Iterable[BisectionResult], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(csv_rows(results))


def to_csv(results: Iterable[BisectionResult]) -> str:
    buf = io.StringIO()
    write_csv(results, buf)
    return buf.getvalue()
