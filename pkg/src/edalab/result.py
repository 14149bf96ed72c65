from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .bayesnet import ConditionalModel, NetworkStructure

Seed = Union[int, np.random.SeedSequence]
# Called at generation boundaries with (iteration, best fitness, edge count).
TraceFn = Callable[[int, float, int], None]


@dataclass
class RunResult:
    success: bool
    evaluations: int
    generations_used: float
    best_fitness: float
    final_structure: NetworkStructure
    iterations: int = 0
    model: Optional[ConditionalModel] = field(default=None, repr=False)


def make_rng(seed: Seed) -> np.random.Generator:
    return np.random.default_rng(seed)
