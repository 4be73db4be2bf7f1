# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels in ``_pykernels``; same signatures and results."""
import numpy as np

cimport numpy as cnp
from libc.stdlib cimport free, malloc, qsort

cnp.import_array()


def split_stats(
    const cnp.int64_t[::1] colptr,
    const cnp.int32_t[::1] rowidx,
    colidx,
    const cnp.int32_t[::1] node_of,
    const double[::1] residuals,
    Py_ssize_t n_nodes,
):
    cdef Py_ssize_t n_cols = colptr.shape[0] - 1
    counts = np.zeros((n_cols, n_nodes), dtype=np.int64)
    sums = np.zeros((n_cols, n_nodes), dtype=np.float64)
    cdef cnp.int64_t[:, ::1] c = counts
    cdef double[:, ::1] s = sums
    cdef Py_ssize_t j, p
    cdef cnp.int32_t i, a
    with nogil:
        for j in range(n_cols):
            for p in range(colptr[j], colptr[j + 1]):
                i = rowidx[p]
                a = node_of[i]
                if a >= 0:
                    c[j, a] += 1
                    s[j, a] += residuals[i]
    return counts, sums


# ---------------------------------------------------------------------------
# canonical search

cdef struct Graph:
    int n
    int m
    long long base
    int* ptr
    int* nbr
    int* kind
    int* eu
    int* ev
    int* ek


cdef struct Triple:
    int a
    int b
    int k


cdef int _cmp_triple(const void* x, const void* y) noexcept nogil:
    cdef const Triple* p = <const Triple*> x
    cdef const Triple* q = <const Triple*> y
    if p.a != q.a:
        return -1 if p.a < q.a else 1
    if p.b != q.b:
        return -1 if p.b < q.b else 1
    if p.k != q.k:
        return -1 if p.k < q.k else 1
    return 0


cdef inline int _cmp_sig(Graph* g, long long* colors, long long* sig, int v, int w) noexcept nogil:
    if colors[v] != colors[w]:
        return -1 if colors[v] < colors[w] else 1
    cdef int dv = g.ptr[v + 1] - g.ptr[v]
    cdef int dw = g.ptr[w + 1] - g.ptr[w]
    cdef int i
    cdef int d = dv if dv < dw else dw
    for i in range(d):
        if sig[g.ptr[v] + i] != sig[g.ptr[w] + i]:
            return -1 if sig[g.ptr[v] + i] < sig[g.ptr[w] + i] else 1
    if dv != dw:
        return -1 if dv < dw else 1
    return 0


cdef void _sort_ll(long long* xs, int lo, int hi) noexcept nogil:
    cdef int i, j
    cdef long long x
    for i in range(lo + 1, hi):
        x = xs[i]
        j = i - 1
        while j >= lo and xs[j] > x:
            xs[j + 1] = xs[j]
            j -= 1
        xs[j + 1] = x


cdef int _count_cells(int n, long long* colors, int* order) noexcept nogil:
    cdef int i, j, t, cells
    for i in range(n):
        order[i] = i
    for i in range(1, n):
        t = order[i]
        j = i - 1
        while j >= 0 and colors[order[j]] > colors[t]:
            order[j + 1] = order[j]
            j -= 1
        order[j + 1] = t
    cells = 1 if n > 0 else 0
    for i in range(1, n):
        if colors[order[i]] != colors[order[i - 1]]:
            cells += 1
    return cells


cdef int _refine(Graph* g, long long* colors, long long* sig, long long* fresh, int* order) noexcept nogil:
    """In-place refinement; returns the number of cells."""
    cdef int n = g.n
    cdef int n_cells = _count_cells(n, colors, order)
    cdef int v, w, i, j, p, t, rank
    # dense, order-preserving ranks keep signature keys below ``base``
    rank = 0
    fresh[order[0]] = 0
    for i in range(1, n):
        if colors[order[i]] != colors[order[i - 1]]:
            rank += 1
        fresh[order[i]] = rank
    for v in range(n):
        colors[v] = fresh[v]
    while n_cells < n:
        for v in range(n):
            for p in range(g.ptr[v], g.ptr[v + 1]):
                sig[p] = g.kind[p] * g.base + colors[g.nbr[p]]
            _sort_ll(sig, g.ptr[v], g.ptr[v + 1])
        for i in range(n):
            order[i] = i
        for i in range(1, n):
            t = order[i]
            j = i - 1
            while j >= 0 and _cmp_sig(g, colors, sig, order[j], t) > 0:
                order[j + 1] = order[j]
                j -= 1
            order[j + 1] = t
        rank = 0
        fresh[order[0]] = 0
        for i in range(1, n):
            if _cmp_sig(g, colors, sig, order[i - 1], order[i]) != 0:
                rank += 1
            fresh[order[i]] = rank
        if rank + 1 == n_cells:
            break
        for v in range(n):
            colors[v] = fresh[v]
        n_cells = rank + 1
    return n_cells


cdef bint _twins(Graph* g, int u, int v) noexcept nogil:
    cdef int pu = g.ptr[u]
    cdef int pv = g.ptr[v]
    cdef int eu = g.ptr[u + 1]
    cdef int ev = g.ptr[v + 1]
    while True:
        while pu < eu and g.nbr[pu] == v:
            pu += 1
        while pv < ev and g.nbr[pv] == u:
            pv += 1
        if pu == eu or pv == ev:
            return pu == eu and pv == ev
        if g.kind[pu] != g.kind[pv] or g.nbr[pu] != g.nbr[pv]:
            return False
        pu += 1
        pv += 1


cdef struct Best:
    bint found
    Triple* key
    int* pos


cdef void _leaf(Graph* g, long long* colors, int* order, Best* best, Triple* scratch, int* inv) noexcept nogil:
    cdef int n = g.n
    cdef int i, e, a, b, cmp
    _count_cells(n, colors, order)
    for i in range(n):
        inv[order[i]] = i
    for e in range(g.m):
        a = inv[g.eu[e]]
        b = inv[g.ev[e]]
        scratch[e].a = a if a < b else b
        scratch[e].b = b if a < b else a
        scratch[e].k = g.ek[e]
    qsort(scratch, g.m, sizeof(Triple), _cmp_triple)
    if best.found:
        cmp = 0
        for e in range(g.m):
            cmp = _cmp_triple(&scratch[e], &best.key[e])
            if cmp != 0:
                break
        if cmp >= 0:
            return
    best.found = True
    for e in range(g.m):
        best.key[e] = scratch[e]
    for i in range(n):
        best.pos[i] = order[i]


cdef int _search(Graph* g, long long* colors_in, Best* best, Triple* scratch) noexcept nogil:
    cdef int n = g.n
    cdef long long* colors = <long long*> malloc(n * sizeof(long long))
    cdef long long* fresh = <long long*> malloc(n * sizeof(long long))
    cdef long long* sig = <long long*> malloc((g.ptr[n] + 1) * sizeof(long long))
    cdef int* order = <int*> malloc(n * sizeof(int))
    cdef int* cell = <int*> malloc(n * sizeof(int))
    cdef int* reps = <int*> malloc(n * sizeof(int))
    cdef int i, j, v, w, n_cells, start, size, best_size, n_cell, n_reps
    cdef long long best_color, color
    cdef bint dup
    for i in range(n):
        colors[i] = colors_in[i]
    n_cells = _refine(g, colors, sig, fresh, order)
    if n_cells == n:
        _leaf(g, colors, order, best, scratch, cell)
    else:
        _count_cells(n, colors, order)
        best_size = n + 1
        best_color = 0
        start = 0
        for i in range(1, n + 1):
            if i == n or colors[order[i]] != colors[order[start]]:
                size = i - start
                if size > 1 and size < best_size:
                    best_size = size
                    best_color = colors[order[start]]
                start = i
        n_cell = 0
        for v in range(n):
            if colors[v] == best_color:
                cell[n_cell] = v
                n_cell += 1
        n_reps = 0
        for i in range(n_cell):
            v = cell[i]
            dup = False
            for j in range(n_reps):
                if _twins(g, reps[j], v):
                    dup = True
                    break
            if not dup:
                reps[n_reps] = v
                n_reps += 1
        for i in range(n_reps):
            v = reps[i]
            for w in range(n):
                fresh[w] = 2 * colors[w]
            for j in range(n_cell):
                if cell[j] != v:
                    fresh[cell[j]] += 1
            _search(g, fresh, best, scratch)
    free(colors)
    free(fresh)
    free(sig)
    free(order)
    free(cell)
    free(reps)
    return 0


def canonical_search(int n, colors, edges):
    cdef Graph g
    cdef int m = len(edges)
    cdef int i, e, u, v, k, p, t, j
    cdef Best best
    g.n = n
    g.m = m
    g.base = 4 * n + 4
    g.ptr = <int*> malloc((n + 1) * sizeof(int))
    g.nbr = <int*> malloc((2 * m + 1) * sizeof(int))
    g.kind = <int*> malloc((2 * m + 1) * sizeof(int))
    g.eu = <int*> malloc((m + 1) * sizeof(int))
    g.ev = <int*> malloc((m + 1) * sizeof(int))
    g.ek = <int*> malloc((m + 1) * sizeof(int))
    cdef long long* c0 = <long long*> malloc(n * sizeof(long long))
    cdef int* fill = <int*> malloc(n * sizeof(int))
    cdef Triple* scratch = <Triple*> malloc((m + 1) * sizeof(Triple))
    best.found = False
    best.key = <Triple*> malloc((m + 1) * sizeof(Triple))
    best.pos = <int*> malloc(n * sizeof(int))
    try:
        for i in range(n + 1):
            g.ptr[i] = 0
        for e in range(m):
            u, v, k = edges[e]
            g.eu[e] = u
            g.ev[e] = v
            g.ek[e] = k
            g.ptr[u + 1] += 1
            g.ptr[v + 1] += 1
        for i in range(n):
            g.ptr[i + 1] += g.ptr[i]
            fill[i] = g.ptr[i]
            c0[i] = colors[i]
        for e in range(m):
            u = g.eu[e]
            v = g.ev[e]
            g.nbr[fill[u]] = v
            g.kind[fill[u]] = g.ek[e]
            fill[u] += 1
            g.nbr[fill[v]] = u
            g.kind[fill[v]] = g.ek[e]
            fill[v] += 1
        # adjacency sorted by (kind, neighbour), as the twin test expects
        for i in range(n):
            for p in range(g.ptr[i] + 1, g.ptr[i + 1]):
                k = g.kind[p]
                t = g.nbr[p]
                j = p - 1
                while j >= g.ptr[i] and (g.kind[j] > k or (g.kind[j] == k and g.nbr[j] > t)):
                    g.kind[j + 1] = g.kind[j]
                    g.nbr[j + 1] = g.nbr[j]
                    j -= 1
                g.kind[j + 1] = k
                g.nbr[j + 1] = t
        with nogil:
            _search(&g, c0, &best, scratch)
        key = tuple((best.key[e].a, best.key[e].b, best.key[e].k) for e in range(m))
        pos = [best.pos[i] for i in range(n)]
        return key, pos
    finally:
        free(g.ptr)
        free(g.nbr)
        free(g.kind)
        free(g.eu)
        free(g.ev)
        free(g.ek)
        free(c0)
        free(fill)
        free(scratch)
        free(best.key)
        free(best.pos)
