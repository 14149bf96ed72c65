"""Bayesian networks over binary variables.

Structures are stored as per-variable ordered parent tuples. Parent instances
are indexed lexicographically with the first parent as the most significant
bit, and every table over ``(X_i, parents...)`` puts ``X_i`` first.

Entropies and the BIC penalty use log base 2.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from math import log2
from typing import Iterable, Sequence

import numpy as np

# Gains closer than this count as a tie (broken lexicographically).
TIE_TOLERANCE = 1e-9


class CycleError(ValueError):
    """Raised when a parent assignment does not describe a DAG."""


def ancestral_order(structure) -> list[int]:
    """Topological order in which every variable follows its parents.

    Accepts a :class:`NetworkStructure` or a plain sequence of parent lists.
    Among the variables ready at each step the smallest index goes first, so
    an empty network yields ``0, 1, ..., n-1``.
    """
    parents = structure.parents if isinstance(structure, NetworkStructure) else structure
    n = len(parents)
    children = [[] for _ in range(n)]
    indegree = [0] * n
    for i, pa in enumerate(parents):
        for j in pa:
            children[j].append(i)
            indegree[i] += 1
    ready = [i for i in range(n) if indegree[i] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        v = heapq.heappop(ready)
        order.append(v)
        for c in children[v]:
            indegree[c] -= 1
            if indegree[c] == 0:
                heapq.heappush(ready, c)
    if len(order) != n:
        raise CycleError("parent sets contain a directed cycle")
    return order


@dataclass(frozen=True)
class NetworkStructure:
    parents: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        parents = tuple(tuple(int(j) for j in pa) for pa in self.parents)
        object.__setattr__(self, "parents", parents)
        n = len(parents)
        for i, pa in enumerate(parents):
            if len(set(pa)) != len(pa):
                raise ValueError(f"duplicate parent for variable {i}")
            for j in pa:
                if j == i:
                    raise ValueError(f"variable {i} cannot be its own parent")
                if not 0 <= j < n:
                    raise ValueError(f"parent index {j} out of range")
        ancestral_order(parents)

    @classmethod
    def empty(cls, n: int) -> "NetworkStructure":
        return cls(tuple(() for _ in range(n)))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "NetworkStructure":
        parents = [[] for _ in range(n)]
        for j, i in edges:
            parents[i].append(j)
        return cls(tuple(tuple(p) for p in parents))

    @property
    def n(self) -> int:
        return len(self.parents)

    def edges(self) -> list[tuple[int, int]]:
        """All edges as ``(parent, child)`` pairs."""
        return [(j, i) for i, pa in enumerate(self.parents) for j in pa]

    def num_edges(self) -> int:
        return sum(len(pa) for pa in self.parents)

    def with_edge(self, j: int, i: int) -> "NetworkStructure":
        parents = list(self.parents)
        parents[i] = parents[i] + (j,)
        return NetworkStructure(tuple(parents))


@dataclass(frozen=True)
class ConditionalModel:
    """Structure plus ``cpt[i][pi] = p(X_i = 1 | parents = pi)``."""

    structure: NetworkStructure
    cpt: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self):
        cpt = tuple(np.asarray(c, dtype=np.float64) for c in self.cpt)
        object.__setattr__(self, "cpt", cpt)
        if len(cpt) != self.structure.n:
            raise ValueError("one conditional table per variable is required")
        for i, c in enumerate(cpt):
            if c.shape != (1 << len(self.structure.parents[i]),):
                raise ValueError(f"cpt for variable {i} has wrong size {c.shape}")
            if np.any(c < 0) or np.any(c > 1):
                raise ValueError(f"cpt for variable {i} leaves [0, 1]")

    @property
    def n(self) -> int:
        return self.structure.n

    def joint_probability(self, x) -> float:
        """Probability of a full assignment under the factorization."""
        x = np.asarray(x)
        p = 1.0
        for i, pa in enumerate(self.structure.parents):
            q = self.cpt[i][_code(x, pa)]
            p *= q if x[i] else 1.0 - q
        return p


def _code(x, variables: Sequence[int]) -> int:
    idx = 0
    for v in variables:
        idx = (idx << 1) | int(x[v])
    return idx


def _codes(data: np.ndarray, variables: Sequence[int]) -> np.ndarray:
    """Lexicographic index of each row restricted to ``variables``."""
    idx = np.zeros(data.shape[0], dtype=np.int64)
    for v in variables:
        idx = (idx << 1) | data[:, v]
    return idx


def as_dataset(rows) -> np.ndarray:
    data = np.asarray(rows)
    if data.dtype.kind == "U":
        data = np.array([[int(c) for c in r] for r in rows])
    data = np.atleast_2d(data).astype(np.int64)
    if data.shape[0] < 1:
        raise ValueError("a dataset needs at least one row")
    if np.any((data != 0) & (data != 1)):
        raise ValueError("dataset entries must be 0 or 1")
    return data


def count_instances(data, variables: Sequence[int], instance: Sequence[int]) -> int:
    data = as_dataset(data)
    if len(variables) != len(instance):
        raise ValueError("instance length must match the variable subset")
    if len(set(variables)) != len(variables):
        raise ValueError("variables must be distinct")
    if not variables:
        return int(data.shape[0])
    match = np.all(data[:, list(variables)] == np.asarray(instance), axis=1)
    return int(match.sum())


def mle_parameters(data, structure: NetworkStructure) -> ConditionalModel:
    """Maximum-likelihood conditionals; unseen parent instances get 0.5."""
    data = as_dataset(data)
    if data.shape[1] != structure.n:
        raise ValueError("dataset width does not match the structure")
    cpt = []
    for i, pa in enumerate(structure.parents):
        size = 1 << len(pa)
        codes = _codes(data, pa)
        total = np.bincount(codes, minlength=size)
        ones = np.bincount(codes, weights=data[:, i], minlength=size)
        p = np.full(size, 0.5)
        seen = total > 0
        p[seen] = ones[seen] / total[seen]
        cpt.append(p)
    return ConditionalModel(structure, tuple(cpt))


def weighted_entropy(table: np.ndarray) -> float:
    """``-sum t log2(t / (t0 + t1))`` for a (2, R) table of counts or probabilities.

    Row 0 holds the child at 0, row 1 at 1. Zero cells contribute nothing.
    """
    t = np.asarray(table, dtype=np.float64)
    return float(_weighted_entropy_rows(t[None, ...])[0])


def _weighted_entropy_rows(t: np.ndarray) -> np.ndarray:
    # t has shape (batch, 2, R)
    rest = t.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(t > 0, t * np.log2(np.where(t > 0, t, 1.0) / np.where(rest > 0, rest, 1.0)), 0.0)
    return -terms.sum(axis=(1, 2))


def conditional_entropy(data, i: int, parents: Sequence[int]) -> float:
    """Empirical H(X_i | parents) in bits."""
    data = as_dataset(data)
    if i in parents:
        raise ValueError("a variable cannot condition on itself")
    m = len(parents)
    codes = (data[:, i] << m) | _codes(data, parents)
    counts = np.bincount(codes, minlength=2 << m).reshape(2, 1 << m)
    return weighted_entropy(counts) / data.shape[0]


def bic_score(data, structure: NetworkStructure) -> float:
    data = as_dataset(data)
    N = data.shape[0]
    return sum(
        bic_term(data, i, structure.parents[i], N) for i in range(structure.n)
    )


def bic_term(data: np.ndarray, i: int, parents: Sequence[int], N: int | None = None) -> float:
    """The contribution of variable ``i`` to the BIC score."""
    N = data.shape[0] if N is None else N
    m = len(parents)
    return -conditional_entropy(data, i, parents) * N - (1 << m) * log2(N) / 2


def _edge_gains(data: np.ndarray, i: int, parents: list[int], log_n: float) -> np.ndarray:
    """BIC gain of adding each ``j -> i``; entry ``j`` (admissibility not checked)."""
    n = data.shape[1]
    m = len(parents)
    base = (data[:, i] << m) | _codes(data, parents)
    current = np.bincount(base, minlength=2 << m).reshape(2, 1 << m)
    nh_current = weighted_entropy(current)
    size = 4 << m
    # Candidate tables over (X_i, parents, X_j): X_j is the least significant bit.
    idx = (base << 1)[:, None] + data + np.arange(n) * size
    counts = np.bincount(idx.ravel(), minlength=n * size).reshape(n, 2, 2 << m)
    nh_candidate = _weighted_entropy_rows(counts)
    return nh_current - nh_candidate - (1 << m) * log_n / 2


def pick_best(gains: np.ndarray) -> tuple[int, int, float] | None:
    """Best positive entry of a (source, target) gain matrix, ties lexicographic."""
    best = gains.max()
    if not best > 0:
        return None
    flat = np.flatnonzero(gains.ravel() >= best - TIE_TOLERANCE)[0]
    j, i = divmod(int(flat), gains.shape[1])
    return j, i, float(gains[j, i])


def greedy_learn(data, max_parents: int | None = None) -> NetworkStructure:
    """Greedy edge-addition search maximising BIC, starting from no edges."""
    data = as_dataset(data)
    N, n = data.shape
    log_n = log2(N)
    parents: list[list[int]] = [[] for _ in range(n)]
    # reach[a, b]: a path a -> ... -> b exists (a == b included)
    reach = np.eye(n, dtype=bool)
    gains = np.empty((n, n))
    for i in range(n):
        gains[:, i] = _edge_gains(data, i, parents[i], log_n)
    while True:
        # j -> i is blocked when i already reaches j
        blocked = reach.T.copy()
        for i, pa in enumerate(parents):
            blocked[pa, i] = True
            if max_parents is not None and len(pa) >= max_parents:
                blocked[:, i] = True
        best = pick_best(np.where(blocked, -np.inf, gains))
        if best is None:
            break
        j, i, _ = best
        parents[i].append(j)
        reach |= np.outer(reach[:, j], reach[i, :])
        gains[:, i] = _edge_gains(data, i, parents[i], log_n)
    return NetworkStructure(tuple(tuple(p) for p in parents))


def sample(model: ConditionalModel, rng: np.random.Generator) -> np.ndarray:
    """One genotype by probabilistic logic sampling."""
    return sample_many(model, 1, rng)[0]


def sample_many(model: ConditionalModel, count: int, rng: np.random.Generator) -> np.ndarray:
    out = np.zeros((count, model.n), dtype=np.int64)
    u = rng.random((count, model.n))
    for i in ancestral_order(model.structure):
        p = model.cpt[i][_codes(out, model.structure.parents[i])]
        out[:, i] = u[:, i] < p
    return out.astype(np.int8)


def dump_model(model: ConditionalModel) -> str:
    """Text dump: header, one parent line per variable, one CPT line per variable."""
    lines = [f"n={model.n}"]
    for i, pa in enumerate(model.structure.parents):
        lines.append(" ".join([f"{i} <-", *map(str, pa)]).rstrip())
    for c in model.cpt:
        lines.append(" ".join(f"{p:.17g}" for p in c))
    return "\n".join(lines) + "\n"
