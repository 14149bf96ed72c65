"""Compiled inner loops for the incremental algorithms.

Tables live in one flat float64 array. Table ``t`` occupies
``flat[off[t] : off[t] + 2**k[t]]`` and ``tvars[t, :k[t]]`` lists its
variables, most significant bit first. Fitness inside the kernels is the
concatenated trap of order ``block``; a block of one bit is onemax.
"""

import numpy as np
from numba import njit

# Slack allowed when checking an update against the [0, 1] boundary.
BOUNDARY_EPS = 1e-12
# cGA entries this close to 0 or 1 are treated as converged.
SNAP = 1e-9


@njit(cache=True)
def trap_fitness(x, block):
    f = 0.0
    for start in range(0, x.size, block):
        u = 0
        for q in range(block):
            u += x[start + q]
        f += block if u == block else block - 1 - u
    return f


@njit(cache=True)
def update_tables(flat, tvars, tk, toff, w, l, step):
    """Winner/loser update of every table; returns the number of skipped tables."""
    skipped = 0
    for t in range(toff.size):
        iw = 0
        il = 0
        for q in range(tk[t]):
            v = tvars[t, q]
            iw = (iw << 1) | w[v]
            il = (il << 1) | l[v]
        if iw == il:
            continue
        a = toff[t] + iw
        b = toff[t] + il
        if flat[a] + step > 1.0 + BOUNDARY_EPS or flat[b] - step < -BOUNDARY_EPS:
            skipped += 1
            continue
        flat[a] = min(flat[a] + step, 1.0)
        flat[b] = max(flat[b] - step, 0.0)
    return skipped


@njit(cache=True)
def refresh_conditionals(flat, cur_off, npar, cpt, cpt_off):
    for i in range(cur_off.size):
        rows = 1 << npar[i]
        off = cur_off[i]
        for r in range(rows):
            a = flat[off + r]
            b = flat[off + rows + r]
            s = a + b
            cpt[cpt_off[i] + r] = b / s if s > 0.0 else 0.5


@njit(cache=True)
def sample_into(x, u, order, par, npar, cpt, cpt_off):
    for v in order:
        idx = 0
        for q in range(npar[v]):
            idx = (idx << 1) | x[par[v, q]]
        x[v] = 1 if u[v] < cpt[cpt_off[v] + idx] else 0


@njit(cache=True)
def iboa_steps(flat, tvars, tk, toff, cur_off, order, par, npar, cpt, cpt_off,
               refresh, uniforms, step, block, optimum, best):
    """Run ``len(uniforms)`` tournaments; stop early when the optimum is sampled.

    ``best`` is a one-element array holding the best fitness seen so far.
    Returns ``(iterations_done, found, clamp_skips)``.
    """
    k = uniforms.shape[1]
    n = uniforms.shape[2]
    x = np.zeros((k, n), dtype=np.int64)
    f = np.empty(k)
    skipped = 0
    for t in range(uniforms.shape[0]):
        if refresh:
            refresh_conditionals(flat, cur_off, npar, cpt, cpt_off)
        found = False
        for s in range(k):
            sample_into(x[s], uniforms[t, s], order, par, npar, cpt, cpt_off)
            f[s] = trap_fitness(x[s], block)
            if f[s] > best[0]:
                best[0] = f[s]
            if f[s] == optimum:
                found = True
        if found:
            return t + 1, True, skipped
        # ties: first sampled wins, last sampled loses
        wi = 0
        li = 0
        for s in range(1, k):
            if f[s] > f[wi]:
                wi = s
            if f[s] <= f[li]:
                li = s
        skipped += update_tables(flat, tvars, tk, toff, x[wi], x[li], step)
    return uniforms.shape[0], False, skipped


@njit(cache=True)
def table_entropies(flat, tk, toff, out):
    """H(first variable | the rest) in bits for every table."""
    for t in range(toff.size):
        rows = 1 << (tk[t] - 1)
        off = toff[t]
        h = 0.0
        for r in range(rows):
            a = flat[off + r]
            b = flat[off + rows + r]
            s = a + b
            if a > 0.0:
                h -= a * np.log2(a / s)
            if b > 0.0:
                h -= b * np.log2(b / s)
        out[t] = h


@njit(cache=True)
def cga_steps(p, uniforms, step, block, best):
    """cGA tournaments of two. Returns ``(iterations_done, converged)``.

    The run is converged once every entry of ``p`` is exactly 0 or 1.
    ``best`` is a one-element array holding the best fitness sampled so far.
    """
    n = p.size
    x = np.zeros((2, n), dtype=np.int64)
    f = np.empty(2)
    for t in range(uniforms.shape[0]):
        for s in range(2):
            for i in range(n):
                x[s, i] = 1 if uniforms[t, s, i] < p[i] else 0
            f[s] = trap_fitness(x[s], block)
            if f[s] > best[0]:
                best[0] = f[s]
        w = 0 if f[0] >= f[1] else 1
        lo = 1 - w
        converged = True
        for i in range(n):
            if x[w, i] != x[lo, i]:
                if x[w, i] == 1:
                    p[i] = min(1.0, p[i] + step)
                else:
                    p[i] = max(0.0, p[i] - step)
                # snap rounding residue so convergence is exact
                if p[i] < SNAP:
                    p[i] = 0.0
                elif p[i] > 1.0 - SNAP:
                    p[i] = 1.0
            if 0.0 < p[i] < 1.0:
                converged = False
        if converged:
            return t + 1, True
    return uniforms.shape[0], False
