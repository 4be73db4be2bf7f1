"""Labeled undirected graphs, rooted environments and single-edit mutation."""
from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from hypograph import canon

DEFAULT_NODE_BUDGET = 64
DEFAULT_MAX_RADIUS = 6


class GraphError(ValueError):
    pass


class MutationError(RuntimeError):
    pass


@dataclass(frozen=True)
class NodeLabel:
    kind: str
    attrs: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if not isinstance(self.kind, str) or not self.kind:
            raise GraphError("node kind must be a non-empty string")
        if isinstance(self.attrs, Mapping):
            object.__setattr__(self, "attrs", tuple(self.attrs.items()))
        else:
            object.__setattr__(self, "attrs", tuple(tuple(kv) for kv in self.attrs))
        keys = [k for k, _ in self.attrs]
        if len(set(keys)) != len(keys):
            raise GraphError(f"duplicate attribute keys in node label {self.kind!r}")
        for k, v in self.attrs:
            if not isinstance(k, str) or not isinstance(v, str):
                raise GraphError("node attributes must map str to str")

    @cached_property
    def token(self) -> str:
        """Order-independent identity of the label, used for hashing."""
        return json.dumps([self.kind, sorted(self.attrs)], separators=(",", ":"))

    def attr(self, key: str, default: str | None = None) -> str | None:
        for k, v in self.attrs:
            if k == key:
                return v
        return default

    def display(self) -> str:
        if not self.attrs:
            return self.kind
        inner = ",".join(f"{k}={v}" for k, v in self.attrs)
        return f"{self.kind}{{{inner}}}"


@dataclass(frozen=True)
class EdgeLabel:
    kind: str

    def __post_init__(self):
        if not isinstance(self.kind, str) or not self.kind:
            raise GraphError("edge kind must be a non-empty string")


Edge = tuple[int, int, EdgeLabel]


def _check_structure(nodes: Sequence[NodeLabel], edges: Sequence[Edge]) -> None:
    n = len(nodes)
    seen = set()
    for u, v, label in edges:
        if not (isinstance(u, int) and isinstance(v, int)):
            raise GraphError(f"edge endpoints must be integers, got ({u!r}, {v!r})")
        if not (0 <= u < n and 0 <= v < n):
            raise GraphError(f"edge ({u}, {v}) references a missing node (n={n})")
        if u == v:
            raise GraphError(f"self-loop on node {u}")
        key = (u, v) if u < v else (v, u)
        if key in seen:
            raise GraphError(f"duplicate edge between {key[0]} and {key[1]}")
        seen.add(key)
        if not isinstance(label, EdgeLabel):
            raise GraphError("edge label must be an EdgeLabel")


class _Adjacency:
    """Shared adjacency helpers for graphs and environments."""

    nodes: tuple[NodeLabel, ...]
    edges: tuple[Edge, ...]

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, str], ...], ...]:
        adj: list[list[tuple[int, str]]] = [[] for _ in self.nodes]
        for u, v, label in self.edges:
            adj[u].append((v, label.kind))
            adj[v].append((u, label.kind))
        return tuple(tuple(sorted(a)) for a in adj)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def edge_kind(self, u: int, v: int) -> str | None:
        for w, kind in self.adjacency[u]:
            if w == v:
                return kind
        return None


@dataclass(frozen=True)
class LabeledGraph(_Adjacency):
    id: str
    nodes: tuple[NodeLabel, ...] = ()
    edges: tuple[Edge, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple((int(u), int(v), e) for u, v, e in self.edges))
        _check_structure(self.nodes, self.edges)

    @classmethod
    def _unchecked(cls, graph_id: str, nodes: tuple, edges: tuple) -> "LabeledGraph":
        """Construct without validation; only for edits that are valid by construction."""
        g = object.__new__(cls)
        object.__setattr__(g, "id", graph_id)
        object.__setattr__(g, "nodes", nodes)
        object.__setattr__(g, "edges", edges)
        return g

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def permuted(self, perm: Sequence[int], new_id: str | None = None) -> "LabeledGraph":
        """Relabel node ``i`` as ``perm[i]``."""
        n = len(self.nodes)
        if sorted(perm) != list(range(n)):
            raise GraphError("not a permutation of node indices")
        nodes = [None] * n
        for i, p in enumerate(perm):
            nodes[p] = self.nodes[i]
        edges = [(perm[u], perm[v], e) for u, v, e in self.edges]
        return LabeledGraph(new_id or self.id, tuple(nodes), tuple(edges))

    def n_components(self) -> int:
        return _count_components(len(self.nodes), self.adjacency)


@dataclass(frozen=True)
class EnvironmentDescriptor(_Adjacency):
    """Rooted subgraph of all nodes within ``radius`` hops of ``root``."""

    nodes: tuple[NodeLabel, ...]
    edges: tuple[Edge, ...]
    radius: int
    root: int = 0

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple((int(u), int(v), e) for u, v, e in self.edges))
        _check_structure(self.nodes, self.edges)
        if self.radius < 0:
            raise GraphError("radius must be >= 0")
        if not 0 <= self.root < len(self.nodes):
            raise GraphError("root index out of range")
        dist = _bfs_distances(self.adjacency, self.root, self.radius)
        if len(dist) != len(self.nodes):
            raise GraphError("environment has nodes farther than radius from the root")

    @cached_property
    def distances(self) -> dict[int, int]:
        return _bfs_distances(self.adjacency, self.root, self.radius)

    @cached_property
    def eccentricity(self) -> int:
        return max(self.distances.values())

    def to_graph(self, graph_id: str = "env") -> LabeledGraph:
        return LabeledGraph(graph_id, self.nodes, self.edges)

    def to_json(self) -> dict:
        return {
            "radius": self.radius,
            "root": self.root,
            "nodes": [_node_to_json(nl) for nl in self.nodes],
            "edges": [[u, v, {"kind": e.kind}] for u, v, e in self.edges],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "EnvironmentDescriptor":
        nodes = tuple(NodeLabel(n["kind"], tuple((n.get("attrs") or {}).items())) for n in obj["nodes"])
        edges = tuple((int(u), int(v), EdgeLabel(e["kind"])) for u, v, e in obj["edges"])
        return cls(nodes, edges, int(obj["radius"]), int(obj.get("root", 0)))


def _node_to_json(nl: NodeLabel) -> dict:
    out: dict = {"kind": nl.kind}
    if nl.attrs:
        out["attrs"] = dict(nl.attrs)
    return out


def _bfs_distances(adjacency, root: int, radius: int, limit: int | None = None) -> dict[int, int]:
    """Hop distances up to ``radius``; stops early once more than ``limit`` nodes are found."""
    dist = {root: 0}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        d = dist[u]
        if d == radius:
            continue
        for w, _ in adjacency[u]:
            if w not in dist:
                dist[w] = d + 1
                if limit is not None and len(dist) > limit:
                    return dist
                queue.append(w)
    return dist


def _count_components(n: int, adjacency) -> int:
    seen = [False] * n
    count = 0
    for s in range(n):
        if seen[s]:
            continue
        count += 1
        seen[s] = True
        stack = [s]
        while stack:
            u = stack.pop()
            for w, _ in adjacency[u]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
    return count


# ---------------------------------------------------------------------------
# canonical forms

def canonical_form(g: LabeledGraph | EnvironmentDescriptor, node_budget: int = DEFAULT_NODE_BUDGET) -> bytes:
    """Byte string equal for two graphs iff they are label-isomorphic.

    Environments are canonicalized as rooted graphs, so the root is fixed by
    any isomorphism, and the radius is part of the result.
    """
    if len(g.nodes) > node_budget:
        raise canon.CanonicalizationError(
            f"graph has {len(g.nodes)} nodes, canonicalization budget is {node_budget}"
        )
    tokens = [nl.token for nl in g.nodes]
    edges = [(u, v, e.kind) for u, v, e in g.edges]
    if isinstance(g, EnvironmentDescriptor):
        tokens[g.root] = canon.ROOT_MARK + tokens[g.root]
        return b"env:%d:" % g.radius + canon.canonical_bytes(tokens, edges)
    return b"graph:" + canon.canonical_bytes(tokens, edges)


def canonical_order(g: LabeledGraph | EnvironmentDescriptor) -> list[int]:
    """Node indices listed in canonical order (old index per new position)."""
    tokens = [nl.token for nl in g.nodes]
    if isinstance(g, EnvironmentDescriptor):
        tokens[g.root] = canon.ROOT_MARK + tokens[g.root]
    return canon.canonical_permutation(tokens, [(u, v, e.kind) for u, v, e in g.edges])


def canonical_environment(env: EnvironmentDescriptor) -> EnvironmentDescriptor:
    """Reorder an environment's nodes canonically (root comes first)."""
    order = canonical_order(env)
    pos = {old: new for new, old in enumerate(order)}
    nodes = tuple(env.nodes[old] for old in order)
    edges = sorted(
        (min(pos[u], pos[v]), max(pos[u], pos[v]), e) for u, v, e in env.edges
    )
    return EnvironmentDescriptor(nodes, tuple(edges), env.radius, pos[env.root])


def canonical_text(env: EnvironmentDescriptor) -> str:
    """Readable one-line rendering of an environment in canonical order."""
    env = canonical_environment(env)
    parts = []
    for i, nl in enumerate(env.nodes):
        mark = "*" if i == env.root else ""
        parts.append(f"{i}:{nl.display()}{mark}")
    bonds = [f"{u}-{v}:{e.kind}" for u, v, e in env.edges]
    return f"r{env.radius}[" + " ".join(parts) + "|" + " ".join(bonds) + "]"


# ---------------------------------------------------------------------------
# environments

def extract_environment(g: LabeledGraph, root: int, radius: int) -> EnvironmentDescriptor:
    if not 0 <= root < len(g.nodes):
        raise GraphError(f"root {root} out of range")
    if radius < 0:
        raise GraphError("radius must be >= 0")
    dist = _bfs_distances(g.adjacency, root, radius)
    members = sorted(dist, key=lambda v: (dist[v], v))
    pos = {v: i for i, v in enumerate(members)}
    edges = []
    for u, v, e in g.edges:
        if u in pos and v in pos:
            a, b = pos[u], pos[v]
            edges.append((min(a, b), max(a, b), e))
    edges.sort(key=lambda t: (t[0], t[1]))
    return EnvironmentDescriptor(tuple(g.nodes[v] for v in members), tuple(edges), radius, 0)


def contains_environment(
    g: LabeledGraph, env: EnvironmentDescriptor, max_radius: int = DEFAULT_MAX_RADIUS
) -> bool:
    """True iff some node of ``g`` has an ``env.radius``-hop environment isomorphic to ``env``.

    Uses backtracking over candidate roots, independent of canonical hashing.
    """
    if env.radius > max_radius:
        raise GraphError(f"environment radius {env.radius} exceeds max radius {max_radius}")
    root_token = env.nodes[env.root].token
    # within radius >= 1 every neighbour of the root belongs to the environment
    root_degree = len(env.adjacency[env.root]) if env.radius >= 1 else None
    adjacency = g.adjacency
    for u in range(len(g.nodes)):
        if root_degree is not None and len(adjacency[u]) != root_degree:
            continue
        if g.nodes[u].token == root_token and _matches_at(g, u, env):
            return True
    return False


def _matches_at(g: LabeledGraph, u: int, env: EnvironmentDescriptor) -> bool:
    dist = _bfs_distances(g.adjacency, u, env.radius, len(env.nodes))
    if len(dist) != len(env.nodes):
        return False
    members = set(dist)
    g_deg = {v: sum(1 for w, _ in g.adjacency[v] if w in members) for v in dist}
    if sum(g_deg.values()) != 2 * len(env.edges):
        return False
    e_dist = env.distances
    e_adj = env.adjacency
    # BFS order from the root keeps every later node adjacent to an earlier one
    order = sorted(range(len(env.nodes)), key=lambda i: (e_dist[i], i))
    profile_env = sorted((e_dist[i], env.nodes[i].token, len(e_adj[i])) for i in order)
    profile_g = sorted((dist[v], g.nodes[v].token, g_deg[v]) for v in dist)
    if profile_env != profile_g:
        return False

    mapping: dict[int, int] = {env.root: u}
    used = {u}

    def consistent(i: int, v: int) -> bool:
        if dist[v] != e_dist[i] or g.nodes[v].token != env.nodes[i].token:
            return False
        if g_deg[v] != len(e_adj[i]):
            return False
        for j, kind in e_adj[i]:
            if j in mapping and g.edge_kind(v, mapping[j]) != kind:
                return False
        return True

    def extend(k: int) -> bool:
        if k == len(order):
            return True
        i = order[k]
        if i in mapping:
            return extend(k + 1)
        anchor = next((mapping[j] for j, _ in e_adj[i] if j in mapping), None)
        pool = [w for w, _ in g.adjacency[anchor]] if anchor is not None else list(dist)
        for v in pool:
            if v in used or v not in members or not consistent(i, v):
                continue
            mapping[i] = v
            used.add(v)
            if extend(k + 1):
                return True
            del mapping[i]
            used.discard(v)
        return False

    return extend(0)


# ---------------------------------------------------------------------------
# mutation

MUTATION_KINDS = (
    "node_relabel",
    "edge_relabel",
    "edge_add",
    "edge_delete",
    "leaf_add",
    "leaf_delete",
)


@dataclass(frozen=True)
class MutationSpec:
    """Edit kinds with sampling weights plus the label alphabets to draw from."""

    node_labels: tuple[NodeLabel, ...]
    edge_kinds: tuple[str, ...]
    weights: tuple[tuple[str, float], ...] = tuple((k, 1.0) for k in MUTATION_KINDS)
    max_attempts: int = 100

    def __post_init__(self):
        object.__setattr__(self, "node_labels", tuple(self.node_labels))
        object.__setattr__(self, "edge_kinds", tuple(self.edge_kinds))
        w = self.weights.items() if isinstance(self.weights, Mapping) else self.weights
        w = tuple((k, float(x)) for k, x in w)
        for k, x in w:
            if k not in MUTATION_KINDS:
                raise ValueError(f"unknown mutation kind {k!r}")
            if x < 0:
                raise ValueError("mutation weights must be non-negative")
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_graphs(cls, graphs: Iterable[LabeledGraph], **kwargs) -> "MutationSpec":
        labels: dict[str, NodeLabel] = {}
        kinds: set[str] = set()
        for g in graphs:
            for nl in g.nodes:
                labels.setdefault(nl.token, nl)
            kinds.update(e.kind for _, _, e in g.edges)
        return cls(tuple(labels[t] for t in sorted(labels)), tuple(sorted(kinds)), **kwargs)


@dataclass(frozen=True)
class Edit:
    kind: str
    detail: tuple = field(default=())


def mutate(g: LabeledGraph, seed: int | random.Random, spec: MutationSpec) -> LabeledGraph:
    """Apply one random edit; rejects edits that increase the component count."""
    return propose_mutation(g, seed, spec)[0]


def propose_mutation(
    g: LabeledGraph, seed: int | random.Random, spec: MutationSpec
) -> tuple[LabeledGraph, Edit]:
    return Mutator(g, spec).propose(seed)


class Mutator:
    """Single-edit proposals for one graph; candidate sets are computed once."""

    def __init__(self, g: LabeledGraph, spec: MutationSpec):
        if not g.nodes:
            raise MutationError("cannot mutate an empty graph")
        self.graph = g
        self.spec = spec
        self.pairs = _non_adjacent_pairs(g)
        self.kinds = [k for k, w in spec.weights if w > 0 and _has_candidates(g, k, spec, self.pairs)]
        weights = dict(spec.weights)
        self.weights = [weights[k] for k in self.kinds]
        self.components = g.n_components()

    def propose(self, seed: int | random.Random) -> tuple[LabeledGraph, Edit]:
        g, spec = self.graph, self.spec
        if not self.kinds:
            requested = ", ".join(k for k, w in spec.weights if w > 0)
            raise MutationError(f"no legal edit of kind(s) {requested} for graph {g.id!r}")
        rng = seed if isinstance(seed, random.Random) else random.Random(seed)
        for _ in range(spec.max_attempts):
            kind = rng.choices(self.kinds, self.weights)[0]
            out, edit = _apply(g, kind, rng, spec, self.pairs)
            # only deleting an edge can split a component
            if kind != "edge_delete" or out.n_components() <= self.components:
                return out, edit
        raise MutationError(
            f"no connectivity-preserving edit found for graph {g.id!r} after {spec.max_attempts} attempts"
        )


def _non_adjacent_pairs(g: LabeledGraph) -> list[tuple[int, int]]:
    n = len(g.nodes)
    present = {(min(u, v), max(u, v)) for u, v, _ in g.edges}
    return [(u, v) for u in range(n) for v in range(u + 1, n) if (u, v) not in present]


def _has_candidates(g: LabeledGraph, kind: str, spec: MutationSpec, pairs) -> bool:
    if kind == "node_relabel":
        tokens = {nl.token for nl in spec.node_labels}
        return any(len(tokens - {nl.token}) > 0 for nl in g.nodes)
    if kind == "edge_relabel":
        return bool(g.edges) and any(len(set(spec.edge_kinds) - {e.kind}) > 0 for _, _, e in g.edges)
    if kind == "edge_add":
        return bool(spec.edge_kinds) and bool(pairs)
    if kind == "edge_delete":
        return bool(g.edges)
    if kind == "leaf_add":
        return bool(spec.node_labels) and bool(spec.edge_kinds)
    if kind == "leaf_delete":
        return len(g.nodes) >= 2 and any(g.degree(v) == 1 for v in range(len(g.nodes)))
    raise ValueError(kind)


def _apply(
    g: LabeledGraph, kind: str, rng: random.Random, spec: MutationSpec, pairs
) -> tuple[LabeledGraph, Edit]:
    nodes = list(g.nodes)
    edges = list(g.edges)
    if kind == "node_relabel":
        cands = [v for v, nl in enumerate(nodes) if any(x.token != nl.token for x in spec.node_labels)]
        v = rng.choice(cands)
        new = rng.choice([x for x in spec.node_labels if x.token != nodes[v].token])
        nodes[v] = new
        detail = (v, new.token)
    elif kind == "edge_relabel":
        cands = [i for i, (_, _, e) in enumerate(edges) if any(k != e.kind for k in spec.edge_kinds)]
        i = rng.choice(cands)
        u, v, e = edges[i]
        new_kind = rng.choice([k for k in spec.edge_kinds if k != e.kind])
        edges[i] = (u, v, EdgeLabel(new_kind))
        detail = (u, v, new_kind)
    elif kind == "edge_add":
        u, v = rng.choice(pairs)
        new_kind = rng.choice(spec.edge_kinds)
        edges.append((u, v, EdgeLabel(new_kind)))
        detail = (u, v, new_kind)
    elif kind == "edge_delete":
        i = rng.randrange(len(edges))
        u, v, _ = edges.pop(i)
        detail = (u, v)
    elif kind == "leaf_add":
        anchor = rng.randrange(len(nodes))
        label = rng.choice(spec.node_labels)
        new_kind = rng.choice(spec.edge_kinds)
        nodes.append(label)
        edges.append((anchor, len(nodes) - 1, EdgeLabel(new_kind)))
        detail = (anchor, label.token, new_kind)
    elif kind == "leaf_delete":
        v = rng.choice([w for w in range(len(nodes)) if g.degree(w) == 1])
        del nodes[v]
        edges = [
            (a - (a > v), b - (b > v), e) for a, b, e in edges if a != v and b != v
        ]
        detail = (v,)
    else:
        raise ValueError(kind)
    return LabeledGraph._unchecked(g.id, tuple(nodes), tuple(edges)), Edit(kind, detail)
