"""Numba pursuit kernels.

Contracts match ``_kernels_numpy``.  The exhaustive search walks evader
prefixes depth first and keeps one pursuer dynamic-program row per depth,
over the local node set the pursuer can reach from ``y`` in ``T`` steps.
"""

import numpy as np
from numba import njit

from ._accel import NUMBA_OPTS

_INF = np.inf


@njit(**NUMBA_OPTS)
def _dist(flat, sizes, strides, offsets, a, b):
    out = 0.0
    for f in range(sizes.shape[0]):
        n = sizes[f]
        ia = (a // strides[f]) % n
        ib = (b // strides[f]) % n
        d = flat[offsets[f] + ia * n + ib]
        if d > out:
            out = d
    return out


@njit(**NUMBA_OPTS)
def _mix(seed, x, y, depth, order):
    h = np.uint64(seed) * np.uint64(0x9E3779B97F4A7C15)
    h = h + np.uint64(x) * np.uint64(0xBF58476D1CE4E5B9)
    h = h + np.uint64(y) * np.uint64(0x94D049BB133111EB)
    h = h + np.uint64(depth) * np.uint64(0xD6E8FEB86659FD93)
    z = h + np.uint64(order) * np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(**NUMBA_OPTS)
def _local_graph(p_ptr, p_idx, y, T, loc, nodes):
    """BFS ball of radius T around y; fills ``loc``/``nodes`` and returns a local CSR."""
    nodes[0] = y
    loc[y] = 0
    L = 1
    lo = 0
    for _ in range(T):
        hi = L
        for k in range(lo, hi):
            v = nodes[k]
            for e in range(p_ptr[v], p_ptr[v + 1]):
                w = p_idx[e]
                if loc[w] < 0:
                    loc[w] = L
                    nodes[L] = w
                    L += 1
        lo = hi
    lptr = np.zeros(L + 1, dtype=np.int64)
    for k in range(L):
        v = nodes[k]
        c = 0
        for e in range(p_ptr[v], p_ptr[v + 1]):
            if loc[p_idx[e]] >= 0:
                c += 1
        lptr[k + 1] = lptr[k] + c
    lidx = np.empty(lptr[L], dtype=np.int64)
    for k in range(L):
        v = nodes[k]
        pos = lptr[k]
        for e in range(p_ptr[v], p_ptr[v + 1]):
            j = loc[p_idx[e]]
            if j >= 0:
                lidx[pos] = j
                pos += 1
    return L, lptr, lidx


@njit(**NUMBA_OPTS)
def _reset(loc, nodes, L):
    for k in range(L):
        loc[nodes[k]] = -1


@njit(**NUMBA_OPTS)
def _propagate(V, W, lptr, lidx, L):
    for j in range(L):
        W[j] = _INF
    for i in range(L):
        v = V[i]
        if v < _INF:
            for e in range(lptr[i], lptr[i + 1]):
                j = lidx[e]
                if v < W[j]:
                    W[j] = v


@njit(**NUMBA_OPTS)
def _evader_cap(e_ptr, e_idx, flat, sizes, strides, offsets, x, y, T, loc, nodes):
    nodes[0] = x
    loc[x] = 0
    L = 1
    lo = 0
    for _ in range(T):
        hi = L
        for k in range(lo, hi):
            v = nodes[k]
            for e in range(e_ptr[v], e_ptr[v + 1]):
                w = e_idx[e]
                if loc[w] < 0:
                    loc[w] = L
                    nodes[L] = w
                    L += 1
        lo = hi
    cap = 0.0
    for k in range(L):
        d = _dist(flat, sizes, strides, offsets, nodes[k], y)
        if d > cap:
            cap = d
    _reset(loc, nodes, L)
    return cap


@njit(**NUMBA_OPTS)
def delta_exhaustive(e_ptr, e_idx, p_ptr, p_idx, flat, sizes, strides, offsets, x, y, T, loc, nodes):
    cap = _evader_cap(e_ptr, e_idx, flat, sizes, strides, offsets, x, y, T, loc, nodes)
    L, lptr, lidx = _local_graph(p_ptr, p_idx, y, T, loc, nodes)
    V = np.full((T + 1, L), _INF)
    W = np.empty((T + 1, L))
    drow = np.empty(L)
    d0 = _dist(flat, sizes, strides, offsets, x, y)
    V[0, 0] = d0
    best = d0
    path = np.empty(T + 1, dtype=np.int64)
    pos = np.empty(T + 1, dtype=np.int64)
    path[0] = x
    depth = 1
    pos[1] = e_ptr[x]
    _propagate(V[0], W[1], lptr, lidx, L)
    while depth > 0 and best < cap:
        parent = path[depth - 1]
        if pos[depth] >= e_ptr[parent + 1]:
            depth -= 1
            continue
        c = e_idx[pos[depth]]
        pos[depth] += 1
        for j in range(L):
            drow[j] = _dist(flat, sizes, strides, offsets, c, nodes[j])
        if depth == T:
            val = _INF
            for j in range(L):
                v = drow[j] if drow[j] > W[T, j] else W[T, j]
                if v < val:
                    val = v
            if val > best:
                best = val
        else:
            for j in range(L):
                V[depth, j] = drow[j] if drow[j] > W[depth, j] else W[depth, j]
            path[depth] = c
            _propagate(V[depth], W[depth + 1], lptr, lidx, L)
            depth += 1
            pos[depth] = e_ptr[c]
    _reset(loc, nodes, L)
    return best


@njit(**NUMBA_OPTS)
def _beam_core(e_ptr, e_idx, p_ptr, p_idx, flat, sizes, strides, offsets, x, y, T, width, seed, loc, nodes):
    L, lptr, lidx = _local_graph(p_ptr, p_idx, y, T, loc, nodes)
    paths = np.empty((1, T + 1), dtype=np.int64)
    paths[0, 0] = x
    V = np.full((1, L), _INF)
    V[0, 0] = _dist(flat, sizes, strides, offsets, x, y)
    scores = np.empty(1)
    scores[0] = V[0, 0]
    W = np.empty(L)
    exact = True
    for t in range(1, T + 1):
        P = paths.shape[0]
        nch = 0
        for p in range(P):
            last = paths[p, t - 1]
            nch += e_ptr[last + 1] - e_ptr[last]
        cpar = np.empty(nch, dtype=np.int64)
        cnode = np.empty(nch, dtype=np.int64)
        csc = np.empty(nch)
        cV = np.empty((nch, L))
        k = 0
        for p in range(P):
            _propagate(V[p], W, lptr, lidx, L)
            last = paths[p, t - 1]
            for e in range(e_ptr[last], e_ptr[last + 1]):
                c = e_idx[e]
                s = _INF
                for j in range(L):
                    d = _dist(flat, sizes, strides, offsets, c, nodes[j])
                    v = d if d > W[j] else W[j]
                    cV[k, j] = v
                    if v < s:
                        s = v
                cpar[k] = p
                cnode[k] = c
                csc[k] = s
                k += 1
        keys = np.empty(nch, dtype=np.uint64)
        for i in range(nch):
            keys[i] = _mix(seed, x, y, t, i)
        o1 = np.argsort(keys, kind="mergesort")
        neg = np.empty(nch)
        for i in range(nch):
            neg[i] = -csc[o1[i]]
        o2 = np.argsort(neg, kind="mergesort")
        keep = nch
        if nch > width:
            keep = width
            if t < T:
                exact = False
        newp = np.empty((keep, T + 1), dtype=np.int64)
        newV = np.empty((keep, L))
        scores = np.empty(keep)
        for i in range(keep):
            r = o1[o2[i]]
            for u in range(t):
                newp[i, u] = paths[cpar[r], u]
            newp[i, t] = cnode[r]
            newV[i] = cV[r]
            scores[i] = csc[r]
        paths = newp
        V = newV
    _reset(loc, nodes, L)
    return paths[:, : T + 1], scores, exact


@njit(**NUMBA_OPTS)
def delta_batch(xs, ys, e_ptr, e_idx, p_ptr, p_idx, flat, sizes, strides, offsets, T, width, seed):
    n = e_ptr.shape[0] - 1
    loc = np.full(n, -1, dtype=np.int64)
    nodes = np.empty(n, dtype=np.int64)
    vals = np.empty(xs.shape[0])
    exact = np.ones(xs.shape[0], dtype=np.bool_)
    for k in range(xs.shape[0]):
        if width <= 0:
            vals[k] = delta_exhaustive(e_ptr, e_idx, p_ptr, p_idx, flat, sizes, strides, offsets,
                                       xs[k], ys[k], T, loc, nodes)
        else:
            _, sc, ex = _beam_core(e_ptr, e_idx, p_ptr, p_idx, flat, sizes, strides, offsets,
                                   xs[k], ys[k], T, width, seed, loc, nodes)
            best = sc[0]
            for i in range(sc.shape[0]):
                if sc[i] > best:
                    best = sc[i]
            vals[k] = best
            exact[k] = ex
    return vals, exact


@njit(**NUMBA_OPTS)
def beam_layers(e_ptr, e_idx, p_ptr, p_idx, flat, sizes, strides, offsets, x, y, T, width, seed):
    n = e_ptr.shape[0] - 1
    loc = np.full(n, -1, dtype=np.int64)
    nodes = np.empty(n, dtype=np.int64)
    return _beam_core(e_ptr, e_idx, p_ptr, p_idx, flat, sizes, strides, offsets, x, y, T, width, seed, loc, nodes)


@njit(**NUMBA_OPTS)
def orbit_max(fmap, steps, flat, sizes, strides, offsets, ii, jj):
    out = np.empty(ii.shape[0])
    for k in range(ii.shape[0]):
        a = ii[k]
        b = jj[k]
        m = _dist(flat, sizes, strides, offsets, a, b)
        for _ in range(steps):
            a = fmap[a]
            b = fmap[b]
            d = _dist(flat, sizes, strides, offsets, a, b)
            if d > m:
                m = d
        out[k] = m
    return out
