"""Incremental EDAs with fixed model structure: PBIL, cGA and the dependency-tree EDA.

PBIL and cGA keep one probability per bit. The dependency-tree EDA keeps
decayed pairwise counts and rebuilds a maximum mutual information tree from
them every iteration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .bayesnet import TIE_TOLERANCE, NetworkStructure
from .problems import Problem
from .result import RunResult, Seed, TraceFn, make_rng


def _check_pv(p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or np.any(p < 0) or np.any(p > 1):
        raise ValueError("a probability vector is a 1-d array with entries in [0, 1]")
    return p


def sample_vector(p: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    p = _check_pv(p)
    return (rng.random((count, p.size)) < p).astype(np.int8)


def _pv_structure(n: int) -> NetworkStructure:
    return NetworkStructure.empty(n)


# ---------------------------------------------------------------- PBIL

def pbil_update(p, selected, lam: float) -> np.ndarray:
    """Move ``p`` toward each selected string in turn: ``p <- p (1 - lam) + x lam``."""
    if not 0.0 < lam < 1.0:
        raise ValueError("learning rate must lie in (0, 1)")
    p = _check_pv(p).copy()
    for x in np.atleast_2d(selected):
        p = p * (1.0 - lam) + np.asarray(x, dtype=np.float64) * lam
    return np.clip(p, 0.0, 1.0)


def run_pbil(problem: Problem, N: int = 200, n_best: int = 2, lam: float = 0.005,
             max_iterations: Optional[int] = None, seed: Seed = 0,
             trace: Optional[TraceFn] = None) -> RunResult:
    """PBIL; stops as soon as a sampled string is optimal or after the iteration cap.

    ``max_iterations`` defaults to ``n * N``; ``generations_used`` counts
    blocks of ``N`` iterations so the cap reads as ``n`` generations.
    """
    if not 1 <= n_best <= N:
        raise ValueError("need 1 <= n_best <= N")
    n = problem.n
    cap = n * N if max_iterations is None else max_iterations
    rng = make_rng(seed)
    p = np.full(n, 0.5)
    best = -np.inf
    it = 0
    found = False
    while it < cap:
        pop = sample_vector(p, N, rng)
        fitness = problem.evaluate_many(pop)
        it += 1
        best = max(best, float(fitness.max()))
        if best == problem.optimum_fitness:
            found = True
            break
        order = np.argsort(-fitness, kind="stable")[:n_best]
        p = pbil_update(p, pop[order], lam)
        if trace:
            trace(it, best, 0)
        if np.all((p == 0.0) | (p == 1.0)) and not problem.is_optimum(p):
            # the vector now emits a single non-optimal string for good
            it = cap
    return RunResult(found, it * N, it / N, best, _pv_structure(n), iterations=it)


# ---------------------------------------------------------------- cGA

def cga_update(p, winner, loser, N: float) -> np.ndarray:
    """Shift each differing position by ``1/N`` toward the winner, clamped to [0, 1]."""
    if N < 2:
        raise ValueError("N must be at least 2")
    p = _check_pv(p).copy()
    w = np.asarray(winner)
    l = np.asarray(loser)
    p += (w.astype(np.float64) - l) / N
    return np.clip(p, 0.0, 1.0)


def run_cga(problem: Problem, N: int, max_iterations: Optional[int] = None, seed: Seed = 0,
            chunk: int = 4096, trace: Optional[TraceFn] = None) -> RunResult:
    """cGA run until the probability vector has converged to a single string.

    The run succeeds when that string is the optimum. Reaching the iteration
    cap (default ``n * N``) before convergence counts as failure.
    ``trace`` receives (iteration, best fitness, 0) after every ``N`` iterations.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    n = problem.n
    cap = n * N if max_iterations is None else max_iterations
    rng = make_rng(seed)
    p = np.full(n, 0.5)
    best = np.array([-np.inf])
    it = 0
    converged = False
    while it < cap and not converged:
        size = min(chunk, cap - it)
        if trace:
            size = min(size, N - it % N)
        done, converged = _kernels.cga_steps(p, rng.random((size, 2, n)), 1.0 / N,
                                             problem.block_size, best)
        it += done
        if trace and (it % N == 0 or converged):
            trace(it, float(best[0]), 0)
    success = converged and bool(np.all(p == 1.0))
    return RunResult(success, 2 * it, it / N, float(best[0]), _pv_structure(n), iterations=it)


# ---------------------------------------------------------------- dependency-tree EDA

@dataclass
class PairCountArray:
    """Decayed counts ``A[i, j, a, b]`` of ``X_i = a, X_j = b`` for all pairs.

    The array is kept symmetric, ``A[i, j, a, b] == A[j, i, b, a]``. Diagonal
    blocks ``A[i, i]`` carry no meaning and are ignored.
    """

    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.float64)
        c = self.counts
        if c.ndim != 4 or c.shape[0] != c.shape[1] or c.shape[2:] != (2, 2):
            raise ValueError("pair counts must have shape (n, n, 2, 2)")
        off = ~np.eye(c.shape[0], dtype=bool)
        if np.any(c[off] <= 0):
            raise ValueError("pair counts must be strictly positive")

    @property
    def n(self) -> int:
        return self.counts.shape[0]

    @classmethod
    def symmetric(cls, cells: np.ndarray) -> "PairCountArray":
        """Build from the cells of the pairs ``i < j``; the rest is mirrored."""
        cells = np.array(cells, dtype=np.float64)
        n = cells.shape[0]
        iu = np.triu_indices(n, 1)
        out = np.ones_like(cells)
        out[iu] = cells[iu]
        out[iu[1], iu[0]] = np.swapaxes(cells[iu], 1, 2)
        return cls(out)

    def pairwise(self) -> np.ndarray:
        """``P[i, j, a, b] = p(X_i = a, X_j = b)`` for every pair."""
        return self.counts / self.counts.sum(axis=(2, 3), keepdims=True)


def dt_init(n: int, c_init: float = 1000.0) -> PairCountArray:
    if c_init <= 0:
        raise ValueError("initial count must be positive")
    return PairCountArray(np.full((n, n, 2, 2), float(c_init)))


def dt_estimate_pairwise(A: PairCountArray, i: int, j: int) -> np.ndarray:
    """The four probabilities of pair ``(i, j)`` ordered 00, 01, 10, 11."""
    if i == j:
        raise ValueError("a pair needs two distinct variables")
    cells = A.counts[i, j]
    return (cells / cells.sum()).ravel()


def mutual_information(pairwise) -> float:
    """Mutual information in bits of a 2x2 joint given as four probabilities."""
    p = np.asarray(pairwise, dtype=np.float64).reshape(2, 2)
    if abs(p.sum() - 1.0) > 1e-9 or np.any(p < 0):
        raise ValueError("pairwise probabilities must be non-negative and sum to 1")
    outer = np.outer(p.sum(axis=1), p.sum(axis=0))
    nz = p > 0
    return float(np.sum(p[nz] * np.log2(p[nz] / outer[nz])))


def mutual_information_matrix(A: PairCountArray) -> np.ndarray:
    P = A.pairwise()
    outer = P.sum(axis=3)[:, :, :, None] * P.sum(axis=2)[:, :, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(P > 0, P * np.log2(P / outer), 0.0)
    mi = terms.sum(axis=(2, 3))
    np.fill_diagonal(mi, 0.0)
    return mi


@dataclass(frozen=True)
class DependencyTree:
    """Rooted spanning tree; ``parent[root] == -1`` and ``order`` lists parents first."""

    root: int
    parent: tuple[int, ...]
    order: tuple[int, ...]

    def __post_init__(self):
        n = len(self.parent)
        if sorted(self.order) != list(range(n)) or self.order[0] != self.root:
            raise ValueError("order must start at the root and visit every node once")
        if self.parent[self.root] != -1:
            raise ValueError("the root has no parent")
        seen = set()
        for v in self.order:
            if v != self.root and self.parent[v] not in seen:
                raise ValueError("order must place every parent before its child")
            seen.add(v)

    @property
    def n(self) -> int:
        return len(self.parent)

    def edges(self) -> list[tuple[int, int]]:
        return [(self.parent[v], v) for v in self.order[1:]]

    def weight(self, mi: np.ndarray) -> float:
        return float(sum(mi[a, b] for a, b in self.edges()))

    def structure(self) -> NetworkStructure:
        return NetworkStructure.from_edges(self.n, self.edges())


def build_tree(A: PairCountArray, root: int = 0) -> DependencyTree:
    """Maximum mutual information spanning tree grown from ``root`` (Prim).

    Among equally heavy edges the lexicographically smallest (low, high)
    pair is taken, so a uniform array yields a star around the root.
    """
    mi = mutual_information_matrix(A)
    n = A.n
    parent = [-1] * n
    order = [root]
    inside = np.zeros(n, dtype=bool)
    inside[root] = True
    while len(order) < n:
        rows = np.flatnonzero(inside)
        cols = np.flatnonzero(~inside)
        w = mi[np.ix_(rows, cols)]
        top = w.max()
        cand = np.argwhere(w >= top - TIE_TOLERANCE)
        pairs = [(rows[a], cols[b]) for a, b in cand]
        u, v = min(pairs, key=lambda e: (min(e), max(e)))
        parent[v] = int(u)
        order.append(int(v))
        inside[v] = True
    return DependencyTree(root, tuple(parent), tuple(order))


def tree_marginal(A: PairCountArray, i: int) -> float:
    """p(X_i = 1) read off the pair of ``i`` with the lowest-index other variable."""
    if A.n == 1:
        # a single variable has no partner; every cell starts equal so stay at 0.5
        return 0.5
    cells = A.counts[i, 1 if i == 0 else 0]
    return float(cells[1].sum() / cells.sum())


def sample_tree_many(tree: DependencyTree, A: PairCountArray, count: int,
                     rng: np.random.Generator) -> np.ndarray:
    n = tree.n
    u = rng.random((count, n))
    out = np.zeros((count, n), dtype=np.int8)
    r = tree.root
    out[:, r] = u[:, r] < tree_marginal(A, r)
    for v in tree.order[1:]:
        cells = A.counts[v, tree.parent[v]]
        p_one = cells[1] / cells.sum(axis=0)
        out[:, v] = u[:, v] < p_one[out[:, tree.parent[v]]]
    return out


def sample_tree(tree: DependencyTree, A: PairCountArray, rng: np.random.Generator) -> np.ndarray:
    return sample_tree_many(tree, A, 1, rng)[0]


def dt_update(A: PairCountArray, selected, alpha: float = 0.99) -> PairCountArray:
    """Per selected string: decay every cell by ``alpha`` then add 1 to the matching cells."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    c = A.counts.copy()
    n = A.n
    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    for x in np.atleast_2d(selected):
        x = np.asarray(x, dtype=np.int64)
        c *= alpha
        c[ii, jj, x[:, None], x[None, :]] += 1.0
    return PairCountArray(c)


def run_dtree_eda(problem: Problem, N: int = 200, n_best: int = 2, alpha: float = 0.99,
                  c_init: float = 1000.0, max_iterations: Optional[int] = None,
                  seed: Seed = 0, trace: Optional[TraceFn] = None) -> RunResult:
    """Dependency-tree EDA; same loop as PBIL with a tree model. Cap defaults to ``n * N``."""
    if not 1 <= n_best <= N:
        raise ValueError("need 1 <= n_best <= N")
    n = problem.n
    cap = n * N if max_iterations is None else max_iterations
    rng = make_rng(seed)
    A = dt_init(n, c_init)
    best = -np.inf
    it = 0
    found = False
    tree = build_tree(A)
    while it < cap:
        pop = sample_tree_many(tree, A, N, rng)
        fitness = problem.evaluate_many(pop)
        it += 1
        best = max(best, float(fitness.max()))
        if best == problem.optimum_fitness:
            found = True
            break
        order = np.argsort(-fitness, kind="stable")[:n_best]
        A = dt_update(A, pop[order], alpha)
        tree = build_tree(A)
        if trace:
            trace(it, best, n - 1)
    return RunResult(found, it * N, it / N, best, tree.structure(), iterations=it)
