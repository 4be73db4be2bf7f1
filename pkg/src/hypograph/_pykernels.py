"""Reference (numpy / pure Python) versions of the compiled kernels.

The compiled module must return bitwise identical results; the test suite
compares the two directly.
"""
from __future__ import annotations

import numpy as np


def split_stats(colptr, rowidx, colidx, node_of, residuals, n_nodes):
    """Per (column, node) count and residual sum of samples where the column is set.

    Accumulates in CSC order, so the float sums match the compiled loop.
    """
    n_cols = len(colptr) - 1
    owner = node_of[rowidx]
    keep = owner >= 0
    key = colidx[keep].astype(np.int64) * n_nodes + owner[keep]
    size = n_cols * n_nodes
    counts = np.bincount(key, minlength=size).reshape(n_cols, n_nodes)
    sums = np.bincount(key, weights=residuals[rowidx[keep]], minlength=size).reshape(n_cols, n_nodes)
    return counts, sums


def refine(colors: list[int], adj: list[list[tuple[int, int]]]) -> list[int]:
    """Iterate neighbourhood refinement until the partition is stable.

    Cell order is preserved: a node's new color sorts first by its old color.
    """
    n = len(colors)
    n_cells = len(set(colors))
    while n_cells < n:
        sigs = [
            (colors[v], tuple(sorted([(k, colors[u]) for k, u in adj[v]])))
            for v in range(n)
        ]
        ranks = {s: i for i, s in enumerate(sorted(set(sigs)))}
        if len(ranks) == n_cells:
            break
        colors = [ranks[s] for s in sigs]
        n_cells = len(ranks)
    return colors


def _are_twins(u: int, v: int, adj) -> bool:
    nu = sorted((k, w) for k, w in adj[u] if w != v)
    nv = sorted((k, w) for k, w in adj[v] if w != u)
    return nu == nv


def _leaf_key(colors: list[int], adj) -> tuple[tuple, list[int]]:
    pos = sorted(range(len(colors)), key=colors.__getitem__)
    inv = [0] * len(colors)
    for i, v in enumerate(pos):
        inv[v] = i
    edges = sorted(
        (min(inv[v], inv[u]), max(inv[v], inv[u]), k)
        for v in range(len(colors))
        for k, u in adj[v]
        if v < u
    )
    return tuple(edges), pos


def _search(colors: list[int], adj) -> tuple[tuple, list[int]]:
    colors = refine(colors, adj)
    n = len(colors)
    if len(set(colors)) == n:
        return _leaf_key(colors, adj)
    cells: dict[int, list[int]] = {}
    for v, c in enumerate(colors):
        cells.setdefault(c, []).append(v)
    _, cell = min(
        ((c, members) for c, members in cells.items() if len(members) > 1),
        key=lambda item: (len(item[1]), item[0]),
    )
    reps: list[int] = []
    for v in cell:
        # swapping twins is an automorphism, so their subtrees are identical
        if not any(_are_twins(r, v, adj) for r in reps):
            reps.append(v)
    best = None
    for v in reps:
        split = [2 * c for c in colors]
        for w in cell:
            if w != v:
                split[w] += 1
        leaf = _search(split, adj)
        if best is None or leaf[0] < best[0]:
            best = leaf
    return best


def canonical_search(n: int, colors: list[int], edges: list[tuple[int, int, int]]):
    """Minimal leaf of the individualization-refinement tree.

    ``colors`` are invariant initial ranks, ``edges`` carry integer kind ranks.
    Returns the sorted relabeled edge list and, per canonical position, the
    original node index.
    """
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for u, v, k in edges:
        adj[u].append((k, v))
        adj[v].append((k, u))
    return _search(list(colors), adj)
