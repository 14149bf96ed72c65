"""Binary test problems: concatenated deceptive traps and onemax.

Trap partitions are contiguous blocks read from the left. Onemax is not a
trap benchmark; it is kept as a sanity problem every algorithm should solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PROBLEM_NAMES = ("trap4", "trap5", "onemax")


def trap_unit(u: int, size: int) -> float:
    """Fully deceptive trap of order ``size`` applied to a count of ones ``u``."""
    if not 0 <= u <= size:
        raise ValueError(f"count of ones {u} outside [0, {size}]")
    return float(size) if u == size else float(size - 1 - u)


def trap4_unit(u: int) -> float:
    return trap_unit(u, 4)


def trap5_unit(u: int) -> float:
    return trap_unit(u, 5)


def as_genotype(bits) -> np.ndarray:
    g = np.asarray(bits)
    if g.dtype.kind == "U":
        g = np.array([int(c) for c in str(bits)])
    g = g.astype(np.int8)
    if g.ndim != 1 or np.any((g != 0) & (g != 1)):
        raise ValueError("a genotype is a 1-d sequence of 0/1 values")
    return g


@dataclass(frozen=True)
class Problem:
    """A separable fitness function over ``n`` bits made of ``block_size`` groups.

    ``onemax`` uses blocks of one bit, where the unit contribution is the bit
    itself.
    """

    name: str
    n: int
    block_size: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.block_size < 1 or self.n % self.block_size:
            raise ValueError(
                f"{self.name}: n={self.n} is not a multiple of block size {self.block_size}"
            )

    @property
    def optimum_fitness(self) -> float:
        return float(self.n)

    def unit(self, u: int) -> float:
        if self.name == "onemax":
            if u not in (0, 1):
                raise ValueError("onemax unit takes a single bit")
            return float(u)
        return trap_unit(u, self.block_size)

    def evaluate(self, g) -> float:
        g = as_genotype(g)
        if g.size != self.n:
            raise ValueError(f"genotype length {g.size} != problem size {self.n}")
        return float(self.evaluate_many(g[None, :])[0])

    def evaluate_many(self, pop: np.ndarray) -> np.ndarray:
        """Fitness of every row of a (count, n) 0/1 array."""
        pop = np.asarray(pop)
        if pop.ndim != 2 or pop.shape[1] != self.n:
            raise ValueError(f"expected shape (count, {self.n}), got {pop.shape}")
        if self.name == "onemax":
            return pop.sum(axis=1).astype(np.float64)
        b = self.block_size
        u = pop.reshape(pop.shape[0], self.n // b, b).sum(axis=2)
        return np.where(u == b, b, b - 1 - u).sum(axis=1).astype(np.float64)

    def is_optimum(self, g) -> bool:
        return self.evaluate(g) == self.optimum_fitness

    def optimum(self) -> np.ndarray:
        return np.ones(self.n, dtype=np.int8)


def make_problem(name: str, n: int) -> Problem:
    sizes = {"trap4": 4, "trap5": 5, "onemax": 1}
    if name not in sizes:
        raise ValueError(f"unknown problem {name!r}; choose from {', '.join(PROBLEM_NAMES)}")
    return Problem(name, n, sizes[name])
