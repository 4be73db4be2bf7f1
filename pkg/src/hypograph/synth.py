"""Random labeled graphs with planted motif -> target rules (exact ground truth).

Each graph is a random connected host graph; motifs are grafted by a single
new edge from one of their outermost nodes (distance == radius from the motif
root) to a host node, so the motif root's environment is exactly the motif.
The final presence of every motif is checked with ``contains_environment``;
hosts whose presence vector differs from the plan are redrawn.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from hypograph.fingerprint import HASH_VERSION, environment_id, format_id
from hypograph.graph import (
    EdgeLabel,
    EnvironmentDescriptor,
    GraphError,
    LabeledGraph,
    NodeLabel,
    contains_environment,
)
from hypograph.ingest import Dataset, graph_to_json

RULE_KINDS = ("additive", "xor-pair", "absence-pair")
DESIGNS = ("balanced", "independent")
RETRY_BUDGET = 100


class SynthError(ValueError):
    pass


@dataclass(frozen=True)
class PlantedRule:
    """``additive``: effect if the motif is present. ``xor-pair``: effect if
    exactly one of two motifs is present. ``absence-pair``: effect if neither is."""

    kind: str
    motifs: tuple[EnvironmentDescriptor, ...]
    effect: float
    fraction: float = 0.5
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "motifs", tuple(self.motifs))
        if self.kind not in RULE_KINDS:
            raise SynthError(f"unknown rule kind {self.kind!r}")
        want = 1 if self.kind == "additive" else 2
        if len(self.motifs) != want:
            raise SynthError(f"rule {self.label!r}: {self.kind} needs {want} motif(s)")
        if not math.isfinite(self.effect) or self.effect == 0:
            raise SynthError(f"rule {self.label!r}: effect must be finite and nonzero")
        if not 0 < self.fraction < 1:
            raise SynthError(f"rule {self.label!r}: fraction must be in (0, 1)")
        if want == 2 and environment_id(self.motifs[0]) == environment_id(self.motifs[1]):
            raise SynthError(f"rule {self.label!r}: the two motifs are identical")

    @property
    def label(self) -> str:
        return self.name or self.kind

    def value(self, present: Sequence[bool]) -> float:
        if self.kind == "additive":
            hit = present[0]
        elif self.kind == "xor-pair":
            hit = present[0] != present[1]
        else:
            hit = not present[0] and not present[1]
        return self.effect if hit else 0.0

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "effect": self.effect,
            "fraction": self.fraction,
            "motifs": [m.to_json() for m in self.motifs],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "PlantedRule":
        motifs = obj.get("motifs")
        if motifs is None and "motif" in obj:
            motifs = [obj["motif"]]
        if not isinstance(motifs, list):
            raise SynthError("rule needs 'motif' or 'motifs'")
        return cls(
            str(obj.get("kind", "additive")),
            tuple(EnvironmentDescriptor.from_json(m) for m in motifs),
            float(obj["effect"]),
            float(obj.get("fraction", 0.5)),
            str(obj.get("name", "")),
        )


def _label(obj) -> NodeLabel:
    if isinstance(obj, NodeLabel):
        return obj
    if isinstance(obj, str):
        return NodeLabel(obj)
    return NodeLabel(obj["kind"], tuple((obj.get("attrs") or {}).items()))


@dataclass(frozen=True)
class SynthSpec:
    n_graphs: int
    node_range: tuple[int, int]
    node_alphabet: tuple[NodeLabel, ...]
    edge_alphabet: tuple[str, ...]
    edge_density: float = 0.1
    rules: tuple[PlantedRule, ...] = ()
    noise: float = 0.0
    baseline: float = 0.0
    seed: int = 0
    design: str = "balanced"
    id_prefix: str = "s"

    def __post_init__(self):
        object.__setattr__(self, "node_alphabet", tuple(_label(x) for x in self.node_alphabet))
        object.__setattr__(self, "edge_alphabet", tuple(self.edge_alphabet))
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "node_range", tuple(int(x) for x in self.node_range))
        lo, hi = self.node_range
        if self.n_graphs < 1:
            raise SynthError("n_graphs must be >= 1")
        if not 1 <= lo <= hi:
            raise SynthError("node_range must satisfy 1 <= min <= max")
        if not self.node_alphabet or not self.edge_alphabet:
            raise SynthError("label alphabets must be non-empty")
        if not 0 <= self.edge_density <= 1:
            raise SynthError("edge_density must be in [0, 1]")
        if not (math.isfinite(self.noise) and self.noise >= 0):
            raise SynthError("noise must be finite and >= 0")
        if self.design not in DESIGNS:
            raise SynthError(f"design must be one of {', '.join(DESIGNS)}")
        for rule in self.rules:
            for m in rule.motifs:
                if len(m.nodes) > lo:
                    raise SynthError(f"rule {rule.label!r}: motif larger than the minimum node count")
                if m.eccentricity != m.radius:
                    raise SynthError(
                        f"rule {rule.label!r}: motif radius {m.radius} exceeds its depth {m.eccentricity};"
                        " it could only occur as a separate component"
                    )

    def to_json(self) -> dict:
        return {
            "n_graphs": self.n_graphs,
            "node_range": list(self.node_range),
            "node_alphabet": [
                {"kind": nl.kind, "attrs": dict(nl.attrs)} if nl.attrs else nl.kind for nl in self.node_alphabet
            ],
            "edge_alphabet": list(self.edge_alphabet),
            "edge_density": self.edge_density,
            "rules": [r.to_json() for r in self.rules],
            "noise": self.noise,
            "baseline": self.baseline,
            "seed": self.seed,
            "design": self.design,
            "id_prefix": self.id_prefix,
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "SynthSpec":
        try:
            return cls(
                int(obj["n_graphs"]),
                tuple(obj["node_range"]),
                tuple(obj["node_alphabet"]),
                tuple(obj["edge_alphabet"]),
                float(obj.get("edge_density", 0.1)),
                tuple(PlantedRule.from_json(r) for r in obj.get("rules", [])),
                float(obj.get("noise", 0.0)),
                float(obj.get("baseline", 0.0)),
                int(obj.get("seed", 0)),
                str(obj.get("design", "balanced")),
                str(obj.get("id_prefix", "s")),
            )
        except (KeyError, TypeError, GraphError) as exc:
            raise SynthError(f"invalid synth spec: {exc}") from None

    @classmethod
    def load(cls, path: str | Path) -> "SynthSpec":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SynthError(f"{path}:{exc.lineno}: malformed JSON ({exc.msg})") from None
        return cls.from_json(obj)


@dataclass
class GroundTruth:
    baseline: float
    noise: float
    rules: tuple[PlantedRule, ...]
    motif_ids: tuple[int, ...]
    presence: np.ndarray  # samples x motifs, bool
    signal: np.ndarray  # noiseless target per sample
    graph_ids: tuple[str, ...] = field(default=())

    def motif_column(self, fid: int) -> np.ndarray:
        return self.presence[:, self.motif_ids.index(fid)].copy()

    def rule_motif_ids(self, rule: PlantedRule) -> tuple[int, ...]:
        return tuple(environment_id(m) for m in rule.motifs)

    def to_json(self) -> dict:
        return {
            "hash_version": HASH_VERSION,
            "baseline": self.baseline,
            "noise": self.noise,
            "rules": [
                {**r.to_json(), "motif_ids": [format_id(f) for f in self.rule_motif_ids(r)]} for r in self.rules
            ],
            "motif_ids": [format_id(f) for f in self.motif_ids],
            "samples": [
                {"id": gid, "present": [format_id(self.motif_ids[j]) for j in np.flatnonzero(row)], "signal": float(s)}
                for gid, row, s in zip(self.graph_ids, self.presence, self.signal)
            ],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "GroundTruth":
        rules = tuple(PlantedRule.from_json(r) for r in obj["rules"])
        motif_ids = tuple(int(f, 16) for f in obj["motif_ids"])
        samples = obj.get("samples", [])
        presence = np.zeros((len(samples), len(motif_ids)), dtype=bool)
        where = {f: j for j, f in enumerate(motif_ids)}
        for i, s in enumerate(samples):
            for f in s["present"]:
                presence[i, where[int(f, 16)]] = True
        return cls(
            float(obj["baseline"]),
            float(obj["noise"]),
            rules,
            motif_ids,
            presence,
            np.array([s["signal"] for s in samples], dtype=float),
            tuple(s["id"] for s in samples),
        )

    @classmethod
    def load(cls, path: str | Path) -> "GroundTruth":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def _unique_motifs(rules: Sequence[PlantedRule]) -> tuple[list[EnvironmentDescriptor], list[int], list[float]]:
    motifs, ids, fractions = [], [], []
    for rule in rules:
        for m in rule.motifs:
            fid = environment_id(m)
            if fid not in ids:
                motifs.append(m)
                ids.append(fid)
                fractions.append(rule.fraction)
    return motifs, ids, fractions


def plan_presence(n: int, fractions: Sequence[float], rng: np.random.Generator, design: str = "balanced") -> np.ndarray:
    """Boolean samples x motifs plan.

    ``balanced`` stratifies each motif over the presence patterns of the motifs
    before it, so the planted motifs are (up to rounding) uncorrelated.
    """
    plan = np.zeros((n, len(fractions)), dtype=bool)
    for j, frac in enumerate(fractions):
        if design == "independent":
            plan[:, j] = rng.random(n) < frac
            continue
        keys = [tuple(row) for row in plan[:, :j]]
        strata: dict[tuple, list[int]] = {}
        for i, key in enumerate(keys):
            strata.setdefault(key, []).append(i)
        for key in sorted(strata):
            members = np.array(strata[key])
            count = int(math.floor(frac * len(members) + rng.random()))
            chosen = rng.choice(members, size=min(count, len(members)), replace=False)
            plan[chosen, j] = True
    return plan


def _host(n_nodes: int, spec: SynthSpec, rng: np.random.Generator) -> tuple[list[NodeLabel], list]:
    alphabet = spec.node_alphabet
    kinds = spec.edge_alphabet
    nodes = [alphabet[int(rng.integers(len(alphabet)))] for _ in range(n_nodes)]
    edges = []
    present = set()
    for v in range(1, n_nodes):
        u = int(rng.integers(v))
        edges.append((u, v, EdgeLabel(kinds[int(rng.integers(len(kinds)))])))
        present.add((u, v))
    if spec.edge_density > 0:
        for u in range(n_nodes):
            for v in range(u + 1, n_nodes):
                if (u, v) not in present and rng.random() < spec.edge_density:
                    edges.append((u, v, EdgeLabel(kinds[int(rng.integers(len(kinds)))])))
    return nodes, edges


def _graft(nodes: list, edges: list, host_size: int, motif: EnvironmentDescriptor, spec: SynthSpec,
           rng: np.random.Generator) -> None:
    offset = len(nodes)
    nodes.extend(motif.nodes)
    edges.extend((u + offset, v + offset, e) for u, v, e in motif.edges)
    outer = sorted(w for w, d in motif.distances.items() if d == motif.radius)
    attach = outer[int(rng.integers(len(outer)))] + offset
    anchor = int(rng.integers(host_size))
    kind = spec.edge_alphabet[int(rng.integers(len(spec.edge_alphabet)))]
    edges.append((anchor, attach, EdgeLabel(kind)))


def _make_graph(index: int, planned: np.ndarray, motifs, motif_names, spec: SynthSpec) -> LabeledGraph:
    rng = np.random.default_rng([spec.seed, index])
    lo, hi = spec.node_range
    last_bad = None
    for _ in range(RETRY_BUDGET):
        host_size = int(rng.integers(lo, hi + 1))
        nodes, edges = _host(host_size, spec, rng)
        for j in np.flatnonzero(planned):
            _graft(nodes, edges, host_size, motifs[j], spec, rng)
        g = LabeledGraph(f"{spec.id_prefix}{index:06d}", tuple(nodes), tuple(edges))
        bad = [j for j, m in enumerate(motifs) if contains_environment(g, m) != bool(planned[j])]
        if not bad:
            return g
        last_bad = bad[0]
    raise SynthError(
        f"could not realize the planned motifs for graph {index} after {RETRY_BUDGET} attempts"
        f" (motif of rule {motif_names[last_bad]!r} keeps {'missing' if planned[last_bad] else 'appearing'})"
    )


def gen_dataset(spec: SynthSpec) -> tuple[Dataset, GroundTruth]:
    motifs, ids, fractions = _unique_motifs(spec.rules)
    names = []
    for fid in ids:
        names.append(next(r.label for r in spec.rules if fid in [environment_id(m) for m in r.motifs]))
    rng = np.random.default_rng(spec.seed)
    plan = plan_presence(spec.n_graphs, fractions, rng, spec.design)
    noise = rng.normal(0.0, 1.0, size=spec.n_graphs) * spec.noise
    where = {fid: j for j, fid in enumerate(ids)}
    graphs = []
    signal = np.empty(spec.n_graphs)
    for i in range(spec.n_graphs):
        graphs.append(_make_graph(i, plan[i], motifs, names, spec))
        signal[i] = _rules_value(spec.rules, spec.baseline, lambda m: bool(plan[i, where[environment_id(m)]]))
    y = signal + noise
    ds = Dataset(tuple(zip(graphs, (float(v) for v in y))), "synth")
    truth = GroundTruth(spec.baseline, spec.noise, spec.rules, tuple(ids), plan, signal, tuple(g.id for g in graphs))
    return ds, truth


def _rules_value(rules: Sequence[PlantedRule], baseline: float, present) -> float:
    total = baseline
    for rule in rules:
        total += rule.value([present(m) for m in rule.motifs])
    return total


def oracle_eval(g: LabeledGraph, rules: Sequence[PlantedRule], baseline: float = 0.0) -> float:
    """Noiseless rule value for any graph, motif presence decided by matching."""
    return _rules_value(rules, baseline, lambda m: contains_environment(g, m))


def write_dataset(ds: Dataset, truth: GroundTruth, out: str | Path, truth_path: str | Path | None = None) -> Path:
    out = Path(out)
    out.write_text("".join(json.dumps(graph_to_json(g, y), separators=(",", ":")) + "\n" for g, y in ds.samples),
                   encoding="utf-8")
    truth_path = Path(truth_path) if truth_path else out.with_name("ground_truth.json")
    truth_path.write_text(json.dumps(truth.to_json(), indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return truth_path


def star_motif(root: str, neighbors: Sequence[tuple[str, str]]) -> EnvironmentDescriptor:
    """Radius-1 motif: a root node with labelled leaves (no edges among them)."""
    nodes = [NodeLabel(root)] + [NodeLabel(k) for k, _ in neighbors]
    edges = [(0, i + 1, EdgeLabel(e)) for i, (_, e) in enumerate(neighbors)]
    return EnvironmentDescriptor(tuple(nodes), tuple(edges), 1, 0)


__all__ = [
    "GroundTruth",
    "PlantedRule",
    "SynthError",
    "SynthSpec",
    "gen_dataset",
    "oracle_eval",
    "plan_presence",
    "star_motif",
    "write_dataset",
]
