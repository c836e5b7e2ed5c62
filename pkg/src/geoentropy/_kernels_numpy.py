"""Pure-numpy pursuit kernels.

Same contracts as ``_kernels_numba``; the exhaustive search expands evader
prefixes layer by layer in blocks instead of depth first, and the pursuer
dynamic program is a ``minimum.reduceat`` over edges grouped by target.
"""

import numpy as np

_BLOCK = 4096
_MASK = (1 << 64) - 1


def table_dist(flat, sizes, strides, offsets, a, b):
    """Base distance between id arrays ``a`` and ``b`` (broadcasting)."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    out = None
    for f in range(len(sizes)):
        n = sizes[f]
        ia = (a // strides[f]) % n
        ib = (b // strides[f]) % n
        d = flat[offsets[f] + ia * n + ib]
        out = d if out is None else np.maximum(out, d)
    return out


def mix_keys(seed, x, y, depth, order):
    """Splitmix64 tie-break keys, identical to the numba version."""
    with np.errstate(over="ignore"):
        h = np.uint64(seed & _MASK) * np.uint64(0x9E3779B97F4A7C15)
        h = h + np.uint64(x) * np.uint64(0xBF58476D1CE4E5B9)
        h = h + np.uint64(y) * np.uint64(0x94D049BB133111EB)
        h = h + np.uint64(depth) * np.uint64(0xD6E8FEB86659FD93)
        z = h + np.asarray(order, dtype=np.uint64) * np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def _reach(ptr, idx, src, T):
    nodes = np.array([src], dtype=np.int64)
    for _ in range(T):
        nxt = np.concatenate([idx[ptr[v] : ptr[v + 1]] for v in nodes])
        nodes = np.unique(np.concatenate([nodes, nxt]))
    return nodes


class _Pursuer:
    """Pursuer graph restricted to the nodes it can reach from ``y`` in ``T`` steps."""

    def __init__(self, p_ptr, p_idx, y, T):
        nodes = _reach(p_ptr, p_idx, y, T)
        pos = {int(v): k for k, v in enumerate(nodes)}
        src, dst = [], []
        for k, v in enumerate(nodes):
            for w in p_idx[p_ptr[v] : p_ptr[v + 1]]:
                j = pos.get(int(w))
                if j is not None:
                    src.append(k)
                    dst.append(j)
        src = np.array(src, dtype=np.int64)
        dst = np.array(dst, dtype=np.int64)
        order = np.argsort(dst, kind="stable")
        self.src = src[order]
        dst = dst[order]
        self.targets, self.starts = np.unique(dst, return_index=True)
        self.nodes = nodes
        self.start = pos[int(y)]

    def propagate(self, V):
        """``W[p, j] = min over edges i -> j of V[p, i]`` for a block of rows."""
        W = np.full(V.shape, np.inf)
        W[:, self.targets] = np.minimum.reduceat(V[:, self.src], self.starts, axis=1)
        return W


def _children(e_ptr, e_idx, last):
    deg = e_ptr[last + 1] - e_ptr[last]
    parent = np.repeat(np.arange(len(last)), deg)
    offs = np.arange(deg.sum()) - np.repeat(np.cumsum(deg) - deg, deg)
    node = e_idx[e_ptr[last][parent] + offs]
    return parent, node


def _start(x, y, pur, table):
    V = np.full((1, len(pur.nodes)), np.inf)
    V[0, pur.start] = table_dist(*table, x, y)
    return V


def delta_exhaustive(e_ptr, e_idx, p_ptr, p_idx, table, x, y, T):
    pur = _Pursuer(p_ptr, p_idx, y, T)
    ev = _reach(e_ptr, e_idx, x, T)
    cap = float(table_dist(*table, ev, y).max())
    best = [float(table_dist(*table, x, y))]

    def expand(V, last, t):
        W = pur.propagate(V)
        parent, node = _children(e_ptr, e_idx, last)
        D = table_dist(*table, node[:, None], pur.nodes[None, :])
        if t == T:
            val = np.maximum(D, W[parent]).min(axis=1).max()
            best[0] = max(best[0], float(val))
            return best[0] >= cap
        Vc = np.maximum(D, W[parent])
        for lo in range(0, len(node), _BLOCK):
            if expand(Vc[lo : lo + _BLOCK], node[lo : lo + _BLOCK], t + 1):
                return True
        return False

    expand(_start(x, y, pur, table), np.array([x], dtype=np.int64), 1)
    return best[0]


def beam_layers(e_ptr, e_idx, p_ptr, p_idx, table, x, y, T, width, seed):
    """Run the beam and return ``(final_paths, final_scores, exact)``.

    Final paths are the kept walks at depth ``T`` sorted by rank.
    """
    pur = _Pursuer(p_ptr, p_idx, y, T)
    V = _start(x, y, pur, table)
    paths = np.array([[x]], dtype=np.int64)
    exact = True
    scores = np.array([float(V.min())])
    for t in range(1, T + 1):
        W = pur.propagate(V)
        parent, node = _children(e_ptr, e_idx, paths[:, -1])
        Vc = np.maximum(table_dist(*table, node[:, None], pur.nodes[None, :]), W[parent])
        sc = Vc.min(axis=1)
        keys = mix_keys(seed, x, y, t, np.arange(len(node)))
        rank = np.lexsort((np.arange(len(node)), keys, -sc))
        if len(node) > width:
            if t < T:
                exact = False
            rank = rank[:width]
        paths = np.hstack([paths[parent[rank]], node[rank, None]])
        V = Vc[rank]
        scores = sc[rank]
    return paths, scores, exact


def delta_beam(e_ptr, e_idx, p_ptr, p_idx, table, x, y, T, width, seed):
    _, scores, exact = beam_layers(e_ptr, e_idx, p_ptr, p_idx, table, x, y, T, width, seed)
    return float(scores.max()), exact


def delta_batch(xs, ys, e_ptr, e_idx, p_ptr, p_idx, table, T, width, seed):
    """Pursuit values for pairs; ``width <= 0`` selects the exhaustive search."""
    vals = np.empty(len(xs))
    exact = np.ones(len(xs), dtype=bool)
    for k in range(len(xs)):
        if width <= 0:
            vals[k] = delta_exhaustive(e_ptr, e_idx, p_ptr, p_idx, table, int(xs[k]), int(ys[k]), T)
        else:
            vals[k], exact[k] = delta_beam(e_ptr, e_idx, p_ptr, p_idx, table, int(xs[k]), int(ys[k]), T, width, seed)
    return vals, exact


def orbit_max(fmap, steps, table, ii, jj):
    """``max_{0<=k<=steps} d(F^k i, F^k j)`` for pairs ``(ii, jj)``."""
    a = np.asarray(ii, dtype=np.int64).copy()
    b = np.asarray(jj, dtype=np.int64).copy()
    out = table_dist(*table, a, b)
    for _ in range(steps):
        a = fmap[a]
        b = fmap[b]
        np.maximum(out, table_dist(*table, a, b), out=out)
    return out
