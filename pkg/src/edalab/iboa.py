"""Incremental BOA driver.

Every iteration samples ``k`` strings from the current network, evaluates
them and feeds the best and worst into the model store. Structure is grown
on a schedule set by the strategy:

``continuous``      structural update after every tournament;
``periodic``        structural update every ``N`` tournaments, sampling
                    probabilities refreshed every tournament (default);
``fully-periodic``  structure and sampling probabilities both refreshed only
                    every ``N`` tournaments.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .bayesnet import ConditionalModel, sample_many
from .incremental import ModelStore, TournamentResult
from .problems import Problem
from .result import RunResult, Seed, TraceFn, make_rng

STRATEGIES = ("continuous", "periodic", "fully-periodic")
_ALIASES = {"periodic-structure": "periodic"}


@dataclass(frozen=True)
class IboaConfig:
    n: int
    N: int
    k: int = 4
    strategy: str = "periodic"
    max_generations: Optional[int] = None
    seed: Seed = 0

    def __post_init__(self):
        object.__setattr__(self, "strategy", _ALIASES.get(self.strategy, self.strategy))
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.k < 2:
            raise ValueError("tournament size k must be at least 2")
        if self.N < self.k:
            raise ValueError("virtual population size must be at least k")
        if self.max_generations is None:
            object.__setattr__(self, "max_generations", self.n)
        if self.max_generations < 1:
            raise ValueError("max_generations must be at least 1")


def select_winner_loser(fitness: np.ndarray) -> tuple[int, int]:
    """First-sampled best and last-sampled worst."""
    fitness = np.asarray(fitness)
    winner = int(np.argmax(fitness))
    loser = len(fitness) - 1 - int(np.argmin(fitness[::-1]))
    return winner, loser


def run_tournament(model: ConditionalModel, problem: Problem, k: int, rng: np.random.Generator):
    """Sample ``k`` strings and return their winner/loser and the evaluations spent."""
    if k < 2:
        raise ValueError("a tournament needs at least two solutions")
    pop = sample_many(model, k, rng)
    w, l = select_winner_loser(problem.evaluate_many(pop))
    return TournamentResult(pop[w], pop[l]), k


def structure_due(strategy: str, iteration: int, N: int) -> bool:
    """Whether a structural update follows tournament number ``iteration`` (1-based)."""
    return strategy == "continuous" or iteration % N == 0


def _deterministic_string(order, par, npar, cpt, cpt_off) -> Optional[np.ndarray]:
    """The only string the sampler can emit, or None if sampling is still random."""
    x = np.zeros(len(order), dtype=np.int64)
    for v in order:
        idx = 0
        for q in range(npar[v]):
            idx = (idx << 1) | x[par[v, q]]
        p = cpt[cpt_off[v] + idx]
        if p != 0.0 and p != 1.0:
            return None
        x[v] = int(p == 1.0)
    return x


def run_iboa(config: IboaConfig, problem: Problem, trace: Optional[TraceFn] = None) -> RunResult:
    return run_iboa_store(config, problem, trace)[0]


def run_iboa_store(config: IboaConfig, problem: Problem,
                   trace: Optional[TraceFn] = None) -> tuple[RunResult, ModelStore]:
    """Like :func:`run_iboa`, also returning the final table store."""
    if problem.n != config.n:
        raise ValueError("config.n does not match the problem size")
    n, N, k = config.n, config.N, config.k
    rng = make_rng(config.seed)
    store = ModelStore(n, N)
    cap = config.max_generations * N
    refresh_each_step = config.strategy != "fully-periodic"
    best = np.array([-np.inf])
    snapshot = store.packed().refresh_conditionals().copy()
    it = 0
    found = False

    while it < cap:
        chunk = 1 if config.strategy == "continuous" else min(N - it % N, cap - it)
        pk = store.packed()
        cpt = pk.cpt if refresh_each_step else snapshot
        done, found, skipped = _kernels.iboa_steps(
            pk.flat, pk.tvars, pk.tk, pk.toff, pk.cur_off, pk.order, pk.par, pk.npar,
            cpt, pk.cpt_off, refresh_each_step, rng.random((chunk, k, n)),
            1.0 / N, problem.block_size, problem.optimum_fitness, best,
        )
        it += done
        store.clamp_skips += skipped
        if found:
            break
        boundary = it % N == 0
        if structure_due(config.strategy, it, N):
            store.structural_update()
        if not boundary:
            continue
        pk = store.packed()
        if refresh_each_step:
            pk.refresh_conditionals()
        else:
            snapshot = pk.refresh_conditionals().copy()
        if trace:
            trace(it, float(best[0]), store.structure.num_edges())
        x = _deterministic_string(pk.order, pk.par, pk.npar, pk.cpt, pk.cpt_off)
        if x is not None and it < cap and not problem.is_optimum(x):
            # Every later tournament samples x k times, so nothing can change
            # again before the cap; jump there with the same outcome.
            edges = store.structure.num_edges()
            for t in range(it + N, cap + 1, N):
                if trace:
                    trace(t, float(best[0]), edges)
            it = cap

    if found and trace:
        trace(it, float(best[0]), store.structure.num_edges())
    result = RunResult(
        success=found,
        evaluations=it * k,
        generations_used=it / N,
        best_fitness=float(best[0]),
        final_structure=store.structure,
        iterations=it,
        model=store.conditionals(),
    )
    return result, store
