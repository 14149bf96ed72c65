"""Population-based BOA used as the reference point for the incremental version.

Each generation selects ``N`` parents by tournaments, learns a network with
the greedy BIC search, samples ``N`` offspring and replaces the whole
population with them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bayesnet import greedy_learn, mle_parameters, sample_many, NetworkStructure
from .problems import Problem
from .result import RunResult, Seed, TraceFn, make_rng


@dataclass(frozen=True)
class BoaConfig:
    n: int
    N: int
    tournament_size: int = 4
    max_generations: Optional[int] = None
    seed: Seed = 0

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("population size must be at least 2")
        if self.tournament_size < 2:
            raise ValueError("tournament size must be at least 2")
        if self.max_generations is None:
            object.__setattr__(self, "max_generations", self.n)
        if self.max_generations < 1:
            raise ValueError("max_generations must be at least 1")


def tournament_indices(fitness: np.ndarray, count: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of ``count`` tournament winners; contestants drawn with replacement.

    Among equally fit contestants the first one drawn wins.
    """
    fitness = np.asarray(fitness, dtype=np.float64)
    if fitness.size == 0:
        raise ValueError("cannot select from an empty population")
    if size < 1:
        raise ValueError("tournament size must be positive")
    if count == 0:
        return np.empty(0, dtype=np.int64)
    draws = rng.integers(0, fitness.size, size=(count, size))
    return draws[np.arange(count), np.argmax(fitness[draws], axis=1)]


def tournament_select(pop: np.ndarray, fitness: np.ndarray, count: int, size: int,
                      rng: np.random.Generator) -> np.ndarray:
    pop = np.asarray(pop)
    return pop[tournament_indices(fitness, count, size, rng)]


def run_boa(config: BoaConfig, problem: Problem, trace: Optional[TraceFn] = None) -> RunResult:
    """Run until the optimum appears in a population or the generation cap.

    ``trace`` receives (generation, best fitness, edge count) after every
    generation.
    """
    if problem.n != config.n:
        raise ValueError("config.n does not match the problem size")
    n, N = config.n, config.N
    rng = make_rng(config.seed)
    pop = rng.integers(0, 2, size=(N, n)).astype(np.int8)
    fitness = problem.evaluate_many(pop)
    best = float(fitness.max())
    structure = NetworkStructure.empty(n)
    model = None
    gen = 0
    found = best == problem.optimum_fitness

    while not found and gen < config.max_generations:
        selected = tournament_select(pop, fitness, N, config.tournament_size, rng)
        structure = greedy_learn(selected)
        model = mle_parameters(selected, structure)
        pop = sample_many(model, N, rng)
        fitness = problem.evaluate_many(pop)
        gen += 1
        best = max(best, float(fitness.max()))
        found = best == problem.optimum_fitness
        if trace:
            trace(gen, best, structure.num_edges())
        if not found and np.all(pop == pop[0]):
            # A population of one repeated string reproduces itself forever
            # through an edgeless, deterministic model.
            structure = NetworkStructure.empty(n)
            model = mle_parameters(pop, structure)
            if trace:
                for g in range(gen + 1, config.max_generations + 1):
                    trace(g, best, 0)
            gen = config.max_generations

    return RunResult(
        success=found,
        evaluations=N * (gen + 1),
        generations_used=float(gen),
        best_fitness=best,
        final_structure=structure,
        iterations=gen,
        model=model,
    )
