"""Population-free Bayesian network model driven by tournament results.

The store keeps joint probability tables instead of a population:

* ``univariate[k]``: p(X_k), kept for every variable for the whole run;
* ``current[i]``: p(X_i, parents of X_i), the source of the conditionals;
* ``candidates[i][j]``: p(X_i, parents of X_i, X_j) for every ``j`` that may
  still become a parent of ``X_i`` without closing a cycle.

Each winner/loser pair moves ``1/N`` of probability mass in every table from
the loser's cell to the winner's cell, which is what replacing the loser by
the winner would do to a population of ``N`` strings.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import log2
from typing import Sequence

import numpy as np

from . import _kernels
from .bayesnet import (
    ConditionalModel,
    NetworkStructure,
    _codes,
    ancestral_order,
    as_dataset,
    dump_model,
    pick_best,
    weighted_entropy,
)


@dataclass(eq=False)
class MarginalTable:
    """Joint distribution over ``vars``; entry index reads the bits in ``vars`` order."""

    vars: tuple[int, ...]
    probs: np.ndarray

    def __post_init__(self):
        self.vars = tuple(int(v) for v in self.vars)
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if not self.vars or len(set(self.vars)) != len(self.vars):
            raise ValueError("a table needs at least one variable, all distinct")
        if self.probs.shape != (1 << len(self.vars),):
            raise ValueError(f"{len(self.vars)} variables need {1 << len(self.vars)} entries")

    @classmethod
    def uniform(cls, vars: Sequence[int]) -> "MarginalTable":
        size = 1 << len(vars)
        return cls(tuple(vars), np.full(size, 1.0 / size))

    @property
    def k(self) -> int:
        return len(self.vars)

    def index(self, x) -> int:
        idx = 0
        for v in self.vars:
            idx = (idx << 1) | int(x[v])
        return idx

    def conditional_entropy(self) -> float:
        """H(first variable | remaining variables) in bits."""
        return weighted_entropy(self.probs.reshape(2, -1))

    def marginalize(self, keep: Sequence[int]) -> np.ndarray:
        """Probabilities over ``keep`` (a subset of ``vars``) in ``keep`` order."""
        axes = [self.vars.index(v) for v in keep]
        cube = self.probs.reshape((2,) * self.k)
        drop = tuple(a for a in range(self.k) if a not in axes)
        reduced = cube.sum(axis=drop) if drop else cube
        remaining = [a for a in range(self.k) if a in axes]
        return np.transpose(reduced, [remaining.index(a) for a in axes]).ravel()


@dataclass(frozen=True)
class TournamentResult:
    winner: np.ndarray
    loser: np.ndarray


def update_table(table: MarginalTable, result: TournamentResult, N: float) -> MarginalTable:
    """Shift ``1/N`` from the loser's entry to the winner's entry, in place.

    If either entry would leave [0, 1] the table is left untouched.
    """
    a = table.index(result.winner)
    b = table.index(result.loser)
    if a == b:
        return table
    step = 1.0 / N
    p = table.probs
    if p[a] + step > 1.0 + _kernels.BOUNDARY_EPS or p[b] - step < -_kernels.BOUNDARY_EPS:
        return table
    p[a] = min(p[a] + step, 1.0)
    p[b] = max(p[b] - step, 0.0)
    return table


class _Packed:
    """Flat view of every stored table plus the arrays the sampler needs."""

    def __init__(self, store: "ModelStore"):
        tables, targets, sources = [], [], []
        current_at = {}
        for i in range(store.n):
            tables.append(store.univariate[i])
            targets.append(i)
            sources.append(-1)
        for i in range(store.n):
            cur = store.current[i]
            if cur is store.univariate[i]:
                current_at[i] = i
            else:
                current_at[i] = len(tables)
                tables.append(cur)
                targets.append(i)
                sources.append(-1)
        for i in range(store.n):
            for j, tab in store.candidates[i].items():
                tables.append(tab)
                targets.append(i)
                sources.append(j)

        self.tables = tables
        self.targets = np.array(targets, dtype=np.int64)
        self.sources = np.array(sources, dtype=np.int64)
        self.tk = np.array([t.k for t in tables], dtype=np.int64)
        sizes = np.left_shift(1, self.tk)
        self.toff = np.concatenate(([0], np.cumsum(sizes)[:-1])).astype(np.int64)
        self.tvars = np.zeros((len(tables), int(self.tk.max())), dtype=np.int64)
        for t, tab in enumerate(tables):
            self.tvars[t, : tab.k] = tab.vars
        self.flat = np.concatenate([t.probs for t in tables])
        for t, tab in enumerate(tables):
            tab.probs = self.flat[self.toff[t] : self.toff[t] + sizes[t]]

        n = store.n
        self.current_at = np.array([current_at[i] for i in range(n)], dtype=np.int64)
        self.cur_off = self.toff[self.current_at]
        self.npar = np.array([len(p) for p in store.parents], dtype=np.int64)
        self.par = np.zeros((n, max(1, int(self.npar.max()))), dtype=np.int64)
        for i, pa in enumerate(store.parents):
            self.par[i, : len(pa)] = pa
        self.order = np.array(ancestral_order(store.parents), dtype=np.int64)
        rows = np.left_shift(1, self.npar)
        self.cpt_off = np.concatenate(([0], np.cumsum(rows)[:-1])).astype(np.int64)
        self.cpt = np.empty(int(rows.sum()))

    def refresh_conditionals(self) -> np.ndarray:
        _kernels.refresh_conditionals(self.flat, self.cur_off, self.npar, self.cpt, self.cpt_off)
        return self.cpt


class ModelStore:
    """The iBOA model: structure plus every table needed to sample and to grow it."""

    def __init__(self, n: int, N: float):
        if n < 1:
            raise ValueError("n must be at least 1")
        if N < 1:
            raise ValueError("virtual population size must be positive")
        self.n = n
        self.N = N
        self.parents: list[list[int]] = [[] for _ in range(n)]
        self.univariate = [MarginalTable.uniform((i,)) for i in range(n)]
        self.current = list(self.univariate)
        self.candidates: list[dict[int, MarginalTable]] = [
            {j: MarginalTable.uniform((i, j)) for j in range(n) if j != i} for i in range(n)
        ]
        # reach[a, b]: a directed path a -> ... -> b exists (a == b included)
        self._reach = np.eye(n, dtype=bool)
        self._packed: _Packed | None = None
        self.clamp_skips = 0

    @classmethod
    def from_dataset(cls, data, structure: NetworkStructure | None = None, N: float | None = None) -> "ModelStore":
        """Store whose tables equal the empirical marginals of ``data``."""
        data = as_dataset(data)
        rows, n = data.shape
        store = cls(n, rows if N is None else N)
        structure = structure or NetworkStructure.empty(n)

        def empirical(vars):
            counts = np.bincount(_codes(data, vars), minlength=1 << len(vars))
            return MarginalTable(tuple(vars), counts / rows)

        store.univariate = [empirical((i,)) for i in range(n)]
        store.parents = [list(p) for p in structure.parents]
        for i in range(n):
            for j in structure.parents[i]:
                store._reach |= np.outer(store._reach[:, j], store._reach[i, :])
        store.current = [
            store.univariate[i] if not store.parents[i] else empirical((i, *store.parents[i]))
            for i in range(n)
        ]
        store.candidates = [
            {j: empirical((i, *store.parents[i], j)) for j in range(n) if store.admissible(j, i)}
            for i in range(n)
        ]
        return store

    @property
    def structure(self) -> NetworkStructure:
        return NetworkStructure(tuple(tuple(p) for p in self.parents))

    def admissible(self, j: int, i: int) -> bool:
        """Whether ``j -> i`` can be added without a duplicate or a cycle."""
        return j != i and j not in self.parents[i] and not self._reach[i, j]

    def tables(self) -> list[MarginalTable]:
        """Every distinct stored table."""
        return list(self.packed().tables)

    def packed(self) -> _Packed:
        if self._packed is None:
            self._packed = _Packed(self)
        return self._packed

    def update_all(self, result: TournamentResult) -> "ModelStore":
        pk = self.packed()
        w = np.asarray(result.winner, dtype=np.int64)
        l = np.asarray(result.loser, dtype=np.int64)
        if w.size != self.n or l.size != self.n:
            raise ValueError("tournament genotypes must have length n")
        self.clamp_skips += _kernels.update_tables(pk.flat, pk.tvars, pk.tk, pk.toff, w, l, 1.0 / self.N)
        return self

    def edge_gain(self, j: int, i: int) -> float:
        """BIC improvement of adding ``j -> i``, computed from the stored tables."""
        if j not in self.candidates[i]:
            raise ValueError(f"no candidate table for edge {j} -> {i}")
        h_now = self.current[i].conditional_entropy()
        h_new = self.candidates[i][j].conditional_entropy()
        m = len(self.parents[i])
        return self.N * (h_now - h_new) - (1 << m) * log2(self.N) / 2

    def add_edge(self, j: int, i: int) -> "ModelStore":
        if j not in self.candidates[i] or not self.admissible(j, i):
            raise ValueError(f"edge {j} -> {i} is not an admissible addition")
        table = self.candidates[i].pop(j)
        self.parents[i].append(j)
        self.current[i] = table
        self._reach |= np.outer(self._reach[:, j], self._reach[i, :])
        # b -> a now closes a cycle for every a upstream of j and b downstream of i
        for a in np.flatnonzero(self._reach[:, j]):
            for b in np.flatnonzero(self._reach[i, :]):
                self.candidates[a].pop(int(b), None)
        # new candidates for X_i assume X_k independent of (X_i, parents)
        for k in self.candidates[i]:
            probs = np.outer(table.probs, self.univariate[k].probs).ravel()
            self.candidates[i][k] = MarginalTable(table.vars + (k,), probs)
        self._packed = None
        return self

    def _gain_matrix(self) -> np.ndarray:
        pk = self.packed()
        h = np.empty(len(pk.tables))
        _kernels.table_entropies(pk.flat, pk.tk, pk.toff, h)
        gains = np.full((self.n, self.n), -np.inf)
        cand = pk.sources >= 0
        tgt = pk.targets[cand]
        m = np.array([len(p) for p in self.parents])[tgt]
        gains[pk.sources[cand], tgt] = (
            self.N * (h[pk.current_at[tgt]] - h[cand]) - np.left_shift(1, m) * log2(self.N) / 2
        )
        return gains

    def structural_update(self) -> int:
        """Greedily add best-gain edges while any gain is positive; returns edges added."""
        gains = self._gain_matrix()
        added = 0
        while (best := pick_best(gains)) is not None:
            j, i, _ = best
            self.add_edge(j, i)
            added += 1
            upstream = self._reach[:, j]
            downstream = self._reach[i, :]
            gains[np.ix_(downstream, upstream)] = -np.inf
            gains[:, i] = -np.inf
            for k in self.candidates[i]:
                gains[k, i] = self.edge_gain(k, i)
        return added

    def conditionals(self) -> ConditionalModel:
        cpt = []
        for tab in self.current:
            t = tab.probs.reshape(2, -1)
            s = t.sum(axis=0)
            cpt.append(np.where(s > 0, t[1] / np.where(s > 0, s, 1.0), 0.5))
        return ConditionalModel(self.structure, tuple(cpt))

    def dump(self) -> str:
        lines = [dump_model(self.conditionals()).rstrip("\n"), "tables"]
        for tab in self.tables():
            lines.append("vars: " + " ".join(map(str, tab.vars)))
            lines.append("probs: " + " ".join(f"{p:.17g}" for p in tab.probs))
        return "\n".join(lines) + "\n"
