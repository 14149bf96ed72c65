import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edalab.baselines import (
    DependencyTree,
    PairCountArray,
    build_tree,
    cga_update,
    dt_estimate_pairwise,
    dt_init,
    dt_update,
    mutual_information,
    mutual_information_matrix,
    pbil_update,
    run_cga,
    run_dtree_eda,
    run_pbil,
    sample_tree,
    sample_tree_many,
    sample_vector,
    tree_marginal,
)
from edalab.problems import make_problem


class PairedProblem:
    """Test-only problem of 2-bit blocks scored by a lookup table over (x0, x1)."""

    block_size = 2

    def __init__(self, n, table):
        self.n = n
        self.table = np.array(table, dtype=float)

    @property
    def optimum_fitness(self):
        return float(self.n // 2 * self.table[3])

    def evaluate_many(self, pop):
        pop = np.asarray(pop)
        return self.table[pop[:, 0::2] * 2 + pop[:, 1::2]].sum(axis=1)

    def is_optimum(self, g):
        return self.evaluate_many(np.asarray(g)[None])[0] == self.optimum_fitness


def random_pairs(rng, n):
    return PairCountArray.symmetric(rng.uniform(0.1, 10.0, size=(n, n, 2, 2)))


def spanning_trees(n):
    """Every labelled spanning tree on n nodes, decoded from Prufer sequences."""
    if n == 1:
        yield []
        return
    if n == 2:
        yield [(0, 1)]
        return
    for seq in itertools.product(range(n), repeat=n - 2):
        degree = [1] * n
        for v in seq:
            degree[v] += 1
        edges = []
        for v in seq:
            leaf = min(i for i in range(n) if degree[i] == 1)
            edges.append((leaf, v))
            degree[leaf] -= 1
            degree[v] -= 1
        u, w = [i for i in range(n) if degree[i] == 1]
        edges.append((u, w))
        yield edges


# ---------------------------------------------------------------- PBIL


def test_pbil_update_examples():
    assert pbil_update([0.5], [[1]], 0.005)[0] == pytest.approx(0.5025)
    assert pbil_update([0.5], [[0]], 0.005)[0] == pytest.approx(0.4975)
    assert pbil_update([1.0, 0.0], [[1, 0]], 0.005).tolist() == [1.0, 0.0]
    with pytest.raises(ValueError):
        pbil_update([0.5], [[1]], 0.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=8), st.data())
def test_pbil_update_stays_between_old_value_and_sample(p, data):
    x = data.draw(st.lists(st.integers(0, 1), min_size=len(p), max_size=len(p)))
    lam = data.draw(st.floats(1e-4, 0.99))
    q = pbil_update(p, [x], lam)
    for a, b, xi in zip(p, q, x):
        assert min(a, xi) - 1e-12 <= b <= max(a, xi) + 1e-12


def test_pbil_solves_onemax():
    assert run_pbil(make_problem("onemax", 16), seed=0).success


def test_fixed_vector_emits_one_string():
    x = sample_vector(np.ones(6), 100, np.random.default_rng(0))
    assert np.all(x == 1)


def test_pbil_counts_evaluations_per_iteration():
    r = run_pbil(make_problem("trap4", 8), N=20, max_iterations=3, seed=1)
    assert r.evaluations == 20 * r.iterations
    assert r.iterations <= 3


# ---------------------------------------------------------------- cGA


def test_cga_update_examples():
    assert cga_update([0.5], [1], [0], 10)[0] == pytest.approx(0.6)
    assert cga_update([0.3, 0.7], [1, 0], [1, 0], 10).tolist() == [0.3, 0.7]
    assert cga_update([0.0], [0], [1], 10)[0] == 0.0
    with pytest.raises(ValueError):
        cga_update([0.5], [1], [0], 1)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=8), st.data(), st.integers(2, 1000))
def test_cga_update_moves_by_one_step_toward_winner(p, data, N):
    w = data.draw(st.lists(st.integers(0, 1), min_size=len(p), max_size=len(p)))
    l = data.draw(st.lists(st.integers(0, 1), min_size=len(p), max_size=len(p)))
    q = cga_update(p, w, l, N)
    for a, b, wi, li in zip(p, q, w, l):
        assert 0.0 <= b <= 1.0
        assert b == pytest.approx(min(1.0, max(0.0, a + (wi - li) / N)))


def test_cga_solves_onemax():
    r = run_cga(make_problem("onemax", 20), 64, seed=0)
    assert r.success
    assert r.evaluations == 2 * r.iterations


def test_cga_fails_trap4_n20_with_small_populations():
    for N in (16, 256):
        assert not any(run_cga(make_problem("trap4", 20), N, seed=s).success for s in range(5))


def test_cga_trace_and_cap():
    trace = []
    r = run_cga(make_problem("trap4", 20), 50, max_iterations=120, seed=2, trace=lambda *t: trace.append(t))
    assert r.iterations <= 120
    assert all(t[0] % 50 == 0 for t in trace[:-1])


def test_cga_is_deterministic():
    a = run_cga(make_problem("trap4", 20), 100, seed=3)
    b = run_cga(make_problem("trap4", 20), 100, seed=3)
    assert (a.success, a.evaluations, a.best_fitness) == (b.success, b.evaluations, b.best_fitness)


# ---------------------------------------------------------------- dependency trees


def test_pairwise_estimate_examples():
    assert dt_estimate_pairwise(dt_init(3), 0, 2).tolist() == [0.25] * 4
    cells = np.ones((2, 2, 2, 2))
    cells[0, 1] = [[1, 2], [3, 4]]
    A = PairCountArray.symmetric(cells)
    assert dt_estimate_pairwise(A, 0, 1) == pytest.approx([0.1, 0.2, 0.3, 0.4])
    assert dt_estimate_pairwise(A, 1, 0) == pytest.approx([0.1, 0.3, 0.2, 0.4])
    with pytest.raises(ValueError):
        dt_estimate_pairwise(A, 1, 1)


def test_pair_counts_must_be_positive():
    with pytest.raises(ValueError):
        PairCountArray(np.zeros((2, 2, 2, 2)))


def test_mutual_information_examples():
    assert mutual_information([0.25] * 4) == pytest.approx(0.0, abs=1e-15)
    assert mutual_information([0.5, 0, 0, 0.5]) == pytest.approx(1.0)
    expected = 0.8 * np.log2(0.4 / 0.25) + 0.2 * np.log2(0.1 / 0.25)
    assert mutual_information([0.4, 0.1, 0.1, 0.4]) == pytest.approx(expected)
    assert mutual_information([0.4, 0.1, 0.1, 0.4]) == pytest.approx(0.278, abs=1e-3)


def test_mi_matrix_matches_pairwise_function():
    A = random_pairs(np.random.default_rng(0), 5)
    mi = mutual_information_matrix(A)
    for i, j in itertools.permutations(range(5), 2):
        assert mi[i, j] == pytest.approx(mutual_information(dt_estimate_pairwise(A, i, j)), abs=1e-12)
    assert np.allclose(mi, mi.T)


def test_uniform_counts_give_a_star_from_zero():
    tree = build_tree(dt_init(5))
    assert tree.edges() == [(0, 1), (0, 2), (0, 3), (0, 4)]


def test_three_variable_tree():
    # pair (0,1) strongly dependent, pair (1,2) mildly, pair (0,2) independent
    cells = np.ones((3, 3, 2, 2))
    cells[0, 1] = [[9, 1], [1, 9]]
    cells[1, 2] = [[6, 4], [4, 6]]
    tree = build_tree(PairCountArray.symmetric(cells))
    assert {frozenset(e) for e in tree.edges()} == {frozenset((0, 1)), frozenset((1, 2))}


def test_single_variable_tree():
    tree = build_tree(dt_init(1))
    assert tree.edges() == [] and tree.order == (0,)
    assert tree_marginal(dt_init(1), 0) == 0.5
    x = sample_tree_many(tree, dt_init(1), 10_000, np.random.default_rng(0))
    assert x.shape == (10_000, 1)
    assert abs(x.mean() - 0.5) < 0.02


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_tree_weight_is_maximal_over_all_spanning_trees(n):
    rng = np.random.default_rng(n)
    for _ in range(10):
        A = random_pairs(rng, n)
        mi = mutual_information_matrix(A)
        best = max(sum(mi[a, b] for a, b in t) for t in spanning_trees(n))
        assert build_tree(A).weight(mi) == pytest.approx(best, abs=1e-9)


def test_prufer_enumeration_counts():
    assert [len(list(spanning_trees(n))) for n in range(1, 6)] == [1, 1, 3, 16, 125]


def test_tree_rejects_bad_orders():
    with pytest.raises(ValueError):
        DependencyTree(0, (-1, 2, 0), (0, 1, 2))
    with pytest.raises(ValueError):
        DependencyTree(1, (-1, 0), (0, 1))


def test_copy_chain_samples_equal_bits():
    cells = np.ones((4, 4, 2, 2))
    for i in range(3):
        cells[i, i + 1] = [[1, 1e-12], [1e-12, 1]]
    A = PairCountArray.symmetric(cells)
    tree = build_tree(A)
    x = sample_tree_many(tree, A, 20_000, np.random.default_rng(1))
    assert np.all(x == x[:, :1])


def test_uniform_counts_give_fair_bits():
    A = dt_init(6)
    x = sample_tree_many(build_tree(A), A, 100_000, np.random.default_rng(2))
    assert np.all(np.abs(x.mean(axis=0) - 0.5) < 0.01)
    assert sample_tree(build_tree(A), A, np.random.default_rng(3)).shape == (6,)


def test_sampling_follows_the_tree_factorization():
    rng = np.random.default_rng(4)
    x = (rng.random((3000, 3)) < 0.5).astype(int)
    x[:, 1] = np.where(rng.random(3000) < 0.8, x[:, 0], 1 - x[:, 0])
    x[:, 2] = np.where(rng.random(3000) < 0.7, x[:, 1], 1 - x[:, 1])
    A = dt_update(dt_init(3, 1.0), x, alpha=0.999)
    tree = build_tree(A)
    assert tree.edges() == [(0, 1), (1, 2)]
    P = A.pairwise()
    samples = sample_tree_many(tree, A, 200_000, rng)
    for a, b, c in itertools.product((0, 1), repeat=3):
        expected = P[0, 1, a, b] * P[1, 2, b, c] / P[1, 2, b].sum()
        observed = np.mean(np.all(samples == (a, b, c), axis=1))
        assert observed == pytest.approx(expected, abs=0.01)


def test_dt_update_single_solution():
    A = dt_update(dt_init(2), [[0, 0]], alpha=0.99)
    assert A.counts[0, 1].tolist() == [[991.0, 990.0], [990.0, 990.0]]
    assert A.counts[1, 0, 0, 0] == 991.0


def test_repeated_solution_approaches_the_fixpoint():
    A = dt_init(2)
    for _ in range(3000):
        A = dt_update(A, [[1, 0]], alpha=0.99)
    assert A.counts[0, 1, 1, 0] == pytest.approx(100.0, rel=1e-6)
    assert A.counts[0, 1, 0, 0] < 1e-9 * A.counts[0, 1, 1, 0] * 1e6


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5).flatmap(
    lambda n: st.lists(st.lists(st.integers(0, 1), min_size=n, max_size=n), min_size=1, max_size=20)),
    st.floats(0.5, 0.999))
def test_updates_keep_counts_positive_and_symmetric(rows, alpha):
    A = dt_init(len(rows[0]))
    A = dt_update(A, rows, alpha)
    c = A.counts
    assert np.all(c > 0)
    assert np.allclose(c, np.swapaxes(np.swapaxes(c, 0, 1), 2, 3))
    for i, j in itertools.permutations(range(A.n), 2):
        assert dt_estimate_pairwise(A, i, j).sum() == pytest.approx(1.0)


def test_dtree_solves_onemax():
    assert run_dtree_eda(make_problem("onemax", 16), seed=0).success


@pytest.mark.slow
def test_tree_model_solves_paired_problem_where_pbil_fails():
    # each 2-bit block rewards 00 locally and 11 most; only the pair carries the signal
    problem = PairedProblem(100, [0.95, 0.0, 0.0, 1.0])
    seeds = range(5)
    pbil = sum(run_pbil(problem, seed=s, max_iterations=3000).success for s in seeds)
    tree = sum(run_dtree_eda(problem, seed=s, max_iterations=3000).success for s in seeds)
    assert pbil == 0
    assert tree == len(seeds)
