"""Circular environment fingerprints with a reverse registry.

Every node contributes one identifier per radius ``0..R``: the 64-bit hash of
the canonical form of its rooted ``r``-hop environment. Identifiers are thus a
function of the environment's isomorphism class only, which keeps the
registry faithful (an id always names exactly one subgraph).
"""
from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from hypograph import canon
from hypograph.graph import (
    EnvironmentDescriptor,
    LabeledGraph,
    canonical_form,
)

HASH_VERSION = "blake2b-64/canonical-env/1"
DEFAULT_RADIUS = 3
_HASH_PERSON = b"hypograph-env"


def hash64(data: bytes) -> int:
    return int.from_bytes(
        hashlib.blake2b(data, digest_size=8, person=_HASH_PERSON).digest(), "big"
    )


def environment_id(env: EnvironmentDescriptor) -> int:
    return hash64(canonical_form(env))


def format_id(fid: int) -> str:
    return f"0x{fid:016x}"


@lru_cache(maxsize=1 << 18)
def _env_canon(
    radius: int, tokens: tuple[str, ...], edges: tuple[tuple[int, int, str], ...]
) -> tuple[bytes, tuple[int, ...]]:
    cb, pos = canon.canonicalize(tokens, edges)
    return b"env:%d:" % radius + cb, tuple(pos)


class _Pending:
    """Deferred environment descriptor: built only when the registry is read."""

    __slots__ = ("graph", "members", "pos", "radius")

    def __init__(self, graph: LabeledGraph, members: list[int], pos: tuple[int, ...], radius: int):
        self.graph = graph
        self.members = members
        self.pos = pos
        self.radius = radius

    def build(self) -> EnvironmentDescriptor:
        g = self.graph
        order = [self.members[p] for p in self.pos]
        new = {w: i for i, w in enumerate(order)}
        edges = sorted(
            (min(new[u], new[v]), max(new[u], new[v]), e)
            for u, v, e in g.edges
            if u in new and v in new
        )
        # root is local position 0 of ``members``
        return EnvironmentDescriptor(
            tuple(g.nodes[w] for w in order), tuple(edges), self.radius, self.pos.index(0)
        )


def _environments(g: LabeledGraph, radius: int):
    """Yield ``(root, r, canonical bytes, pending descriptor)`` per node and radius."""
    tokens = [nl.token for nl in g.nodes]
    adjacency = g.adjacency
    for v in range(len(g.nodes)):
        dist = {v: 0}
        queue = deque([v])
        while queue:
            u = queue.popleft()
            du = dist[u]
            if du == radius:
                continue
            for w, _ in adjacency[u]:
                if w not in dist:
                    dist[w] = du + 1
                    queue.append(w)
        ordered = sorted(dist, key=lambda w: (dist[w], tokens[w], w))
        prev_size = -1
        for r in range(radius + 1):
            members = [w for w in ordered if dist[w] <= r]
            if len(members) != prev_size:
                pos = {w: i for i, w in enumerate(members)}
                local_tokens = [tokens[w] for w in members]
                local_tokens[0] = canon.ROOT_MARK + local_tokens[0]
                local_edges = []
                for w in members:
                    a = pos[w]
                    for x, kind in adjacency[w]:
                        b = pos.get(x)
                        if b is not None and a < b:
                            local_edges.append((a, b, kind))
                local_edges.sort()
                key = (tuple(local_tokens), tuple(local_edges))
                prev_size = len(members)
            cb, perm = _env_canon(r, *key)
            yield v, r, cb, _Pending(g, members, perm, r)


class SubgraphRegistry:
    """Maps feature ids to the (canonically ordered) environment they denote."""

    def __init__(self):
        self._envs: dict[int, EnvironmentDescriptor | _Pending] = {}
        self.canonical: dict[int, bytes] = {}
        self.collisions: list[tuple[int, tuple[bytes, ...]]] = []

    def __contains__(self, fid: int) -> bool:
        return fid in self._envs

    def __getitem__(self, fid: int) -> EnvironmentDescriptor:
        env = self._envs[fid]
        if isinstance(env, _Pending):
            env = self._envs[fid] = env.build()
        return env

    def __len__(self) -> int:
        return len(self._envs)

    def ids(self) -> list[int]:
        return sorted(self._envs)

    def add(self, fid: int, canonical_bytes: bytes, env: EnvironmentDescriptor | _Pending) -> None:
        known = self.canonical.get(fid)
        if known is None:
            self.canonical[fid] = canonical_bytes
            self._envs[fid] = env
        elif known != canonical_bytes:
            self.collisions.append((fid, tuple(sorted({known, canonical_bytes}))))

    def merge(self, updates: dict[int, tuple[bytes, EnvironmentDescriptor | _Pending]]) -> None:
        for fid in sorted(updates):
            cb, env = updates[fid]
            self.add(fid, cb, env)

    def to_json(self) -> dict:
        return {
            "hash_version": HASH_VERSION,
            "entries": {str(fid): self[fid].to_json() for fid in self.ids()},
            "collisions": [[str(fid), [c.decode() for c in forms]] for fid, forms in self.collisions],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SubgraphRegistry":
        reg = cls()
        for key, env_obj in obj["entries"].items():
            env = EnvironmentDescriptor.from_json(env_obj)
            reg._envs[int(key)] = env
            reg.canonical[int(key)] = canonical_form(env)
        reg.collisions = [(int(f), tuple(c.encode() for c in forms)) for f, forms in obj.get("collisions", [])]
        return reg


def featurize(
    g: LabeledGraph, radius: int = DEFAULT_RADIUS, registry: SubgraphRegistry | None = None
) -> tuple[frozenset[int], dict]:
    """Feature ids of ``g`` plus registry entries for ids not yet in ``registry``."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    ids: set[int] = set()
    updates: dict = {}
    for _, _, cb, pending in _environments(g, radius):
        fid = hash64(cb)
        ids.add(fid)
        if fid in updates:
            continue
        if registry is not None and registry.canonical.get(fid) == cb:
            continue
        updates[fid] = (cb, pending)
    return frozenset(ids), updates


@dataclass(frozen=True)
class FeatureMatrix:
    """Sparse binary sample x feature matrix in CSR layout.

    ``vocab`` holds feature ids in ascending order; ``indices`` are positions
    in ``vocab``, sorted within each row.
    """

    vocab: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray

    @classmethod
    def from_sets(cls, rows: Sequence[Iterable[int]]) -> "FeatureMatrix":
        rows = [sorted(set(r)) for r in rows]
        vocab_list = sorted({fid for r in rows for fid in r})
        vocab = np.array(vocab_list, dtype=np.uint64)
        lookup = {fid: i for i, fid in enumerate(vocab_list)}
        indptr = np.zeros(len(rows) + 1, dtype=np.int64)
        chunks = []
        for i, r in enumerate(rows):
            chunks.append([lookup[fid] for fid in r])
            indptr[i + 1] = indptr[i] + len(r)
        indices = np.fromiter((j for c in chunks for j in c), dtype=np.int32, count=int(indptr[-1]))
        return cls(vocab, indptr, indices)

    @property
    def n_samples(self) -> int:
        return len(self.indptr) - 1

    @property
    def n_features(self) -> int:
        return len(self.vocab)

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_samples, self.n_features

    def row_indices(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def row_ids(self, i: int) -> frozenset[int]:
        return frozenset(int(self.vocab[j]) for j in self.row_indices(i))

    def feature_index(self, fid: int) -> int | None:
        j = int(np.searchsorted(self.vocab, np.uint64(fid)))
        if j < len(self.vocab) and int(self.vocab[j]) == fid:
            return j
        return None

    def column(self, fid: int) -> np.ndarray:
        """Presence of feature ``fid`` in every row (all False if unknown)."""
        out = np.zeros(self.n_samples, dtype=bool)
        j = self.feature_index(fid)
        if j is None:
            return out
        rows = np.repeat(np.arange(self.n_samples), np.diff(self.indptr))
        out[rows[self.indices == j]] = True
        return out

    def columns(self, fids: Sequence[int]) -> np.ndarray:
        """Dense boolean block, one column per requested id."""
        out = np.zeros((self.n_samples, len(fids)), dtype=bool)
        where = {}
        for k, fid in enumerate(fids):
            j = self.feature_index(fid)
            if j is not None:
                where.setdefault(j, []).append(k)
        if not where:
            return out
        rows = np.repeat(np.arange(self.n_samples), np.diff(self.indptr))
        for j, ks in where.items():
            hit = rows[self.indices == j]
            for k in ks:
                out[hit, k] = True
        return out

    def csc(self) -> tuple[np.ndarray, np.ndarray]:
        """Column pointers and row indices (rows ascending within a column)."""
        rows = np.repeat(np.arange(self.n_samples, dtype=np.int32), np.diff(self.indptr))
        order = np.argsort(self.indices, kind="stable")
        counts = np.bincount(self.indices, minlength=self.n_features)
        colptr = np.zeros(self.n_features + 1, dtype=np.int64)
        np.cumsum(counts, out=colptr[1:])
        return colptr, rows[order]

    def take(self, rows: Sequence[int]) -> "FeatureMatrix":
        """Row subset; the vocabulary shrinks to ids present in the subset."""
        return FeatureMatrix.from_sets([self.row_ids(int(i)) for i in rows])

    def to_scipy(self):
        from scipy import sparse

        data = np.ones(len(self.indices), dtype=np.int32)
        return sparse.csr_matrix((data, self.indices, self.indptr), shape=self.shape)

    def to_json(self) -> dict:
        return {
            "vocab": [str(int(f)) for f in self.vocab],
            "rows": [[int(j) for j in self.row_indices(i)] for i in range(self.n_samples)],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FeatureMatrix":
        vocab = [int(s) for s in obj["vocab"]]
        return cls.from_sets([[vocab[j] for j in row] for row in obj["rows"]])

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        return (
            np.array_equal(self.vocab, other.vocab)
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )


def featurize_dataset(graphs, radius: int = DEFAULT_RADIUS) -> tuple[FeatureMatrix, SubgraphRegistry]:
    """Featurize every graph; ``graphs`` may be a Dataset or an iterable of graphs."""
    graphs = list(getattr(graphs, "graphs", graphs))
    if not graphs:
        raise ValueError("cannot featurize an empty dataset")
    registry = SubgraphRegistry()
    rows = []
    for g in graphs:
        ids, updates = featurize(g, radius, registry)
        registry.merge(updates)
        rows.append(ids)
    return FeatureMatrix.from_sets(rows), registry


def fold(features: Iterable[int], length: int = 2048) -> tuple[np.ndarray, dict[int, tuple[int, ...]]]:
    """Fold ids into a bit vector; returns the bits and the colliding ids per bit."""
    if length < 64 or length & (length - 1):
        raise ValueError("fold length must be a power of two >= 64")
    bits = np.zeros(length, dtype=np.uint8)
    by_bit: dict[int, set[int]] = {}
    for fid in features:
        b = int(fid) % length
        bits[b] = 1
        by_bit.setdefault(b, set()).add(int(fid))
    collisions = {b: tuple(sorted(ids)) for b, ids in sorted(by_bit.items()) if len(ids) > 1}
    return bits, collisions


__all__ = [
    "HASH_VERSION",
    "DEFAULT_RADIUS",
    "FeatureMatrix",
    "SubgraphRegistry",
    "environment_id",
    "featurize",
    "featurize_dataset",
    "fold",
    "format_id",
    "hash64",
]
