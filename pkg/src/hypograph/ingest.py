"""Dataset loading: JSON-lines graph files, molecule files and labeling helpers."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from hypograph.graph import EdgeLabel, GraphError, LabeledGraph, NodeLabel
from hypograph.smiles import ParseError, parse_molecule

DEFAULT_EDGE_KIND = "edge"


class IngestError(ValueError):
    """Data error with an optional 1-based line number."""

    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        where = ""
        if source is not None:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
        self.message = message
        self.line = line
        self.source = source


@dataclass(frozen=True)
class Dataset:
    samples: tuple[tuple[LabeledGraph, float], ...]
    name: str = "dataset"
    source_lines: tuple[int, ...] = field(default=(), compare=False)

    def __post_init__(self):
        samples = tuple((g, float(y)) for g, y in self.samples)
        object.__setattr__(self, "samples", samples)
        seen: dict[str, int] = {}
        for i, (g, y) in enumerate(samples):
            if g.id in seen:
                raise IngestError(f"duplicate graph id {g.id!r}", self._line(i))
            seen[g.id] = i
            if not math.isfinite(y):
                raise IngestError(f"non-finite target for graph {g.id!r}", self._line(i))

    def _line(self, i: int) -> int | None:
        return self.source_lines[i] if i < len(self.source_lines) else None

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def graphs(self) -> list[LabeledGraph]:
        return [g for g, _ in self.samples]

    @property
    def targets(self) -> np.ndarray:
        return np.array([y for _, y in self.samples], dtype=float)

    def subset(self, rows: Iterable[int]) -> "Dataset":
        rows = list(rows)
        return Dataset(tuple(self.samples[i] for i in rows), self.name)


@dataclass(frozen=True)
class SchmidtRanks:
    d1: int
    d2: int
    d3: int

    def __post_init__(self):
        for d in (self.d1, self.d2, self.d3):
            if not isinstance(d, (int, np.integer)) or isinstance(d, bool) or d < 1:
                raise ValueError(f"Schmidt ranks must be positive integers, got {d!r}")


def n_qubits(r: SchmidtRanks) -> float:
    """Entanglement size log2(d1 d2 d3)."""
    return math.log2(r.d1 * r.d2 * r.d3)


# ---------------------------------------------------------------------------
# graph JSON lines


def _require(cond: bool, message: str, line: int | None) -> None:
    if not cond:
        raise IngestError(message, line)


def graph_from_json(obj, line: int | None = None) -> tuple[LabeledGraph, float | None]:
    _require(isinstance(obj, dict), "record must be a JSON object", line)
    gid = obj.get("id")
    _require(isinstance(gid, str), "field 'id' must be a string", line)
    raw_nodes = obj.get("nodes")
    raw_edges = obj.get("edges")
    _require(isinstance(raw_nodes, list), "field 'nodes' must be a list", line)
    _require(isinstance(raw_edges, list), "field 'edges' must be a list", line)
    nodes = []
    for i, rn in enumerate(raw_nodes):
        _require(isinstance(rn, dict), f"node {i} must be an object", line)
        kind = rn.get("kind")
        _require(isinstance(kind, str) and kind != "", f"node {i} needs a non-empty string 'kind'", line)
        attrs = rn.get("attrs", {})
        _require(isinstance(attrs, dict), f"node {i} 'attrs' must be an object", line)
        for k, v in attrs.items():
            _require(isinstance(v, str), f"node {i} attribute {k!r} must be a string", line)
        nodes.append(NodeLabel(kind, tuple(attrs.items())))
    edges = []
    seen = set()
    for j, re_ in enumerate(raw_edges):
        _require(isinstance(re_, list) and len(re_) in (2, 3), f"edge {j} must be [u, v, {{\"kind\": ...}}]", line)
        u, v = re_[0], re_[1]
        ok = all(isinstance(x, int) and not isinstance(x, bool) for x in (u, v))
        _require(ok, f"edge {j} endpoints must be integers", line)
        _require(0 <= u < len(nodes) and 0 <= v < len(nodes), f"edge {j} has bad node index ({u}, {v})", line)
        _require(u != v, f"edge {j} is a self-loop on node {u}", line)
        key = (min(u, v), max(u, v))
        _require(key not in seen, f"edge {j} duplicates edge between nodes {key[0]} and {key[1]}", line)
        seen.add(key)
        kind = DEFAULT_EDGE_KIND
        if len(re_) == 3:
            lab = re_[2]
            _require(isinstance(lab, dict) and isinstance(lab.get("kind"), str) and lab["kind"] != "",
                     f"edge {j} label needs a non-empty string 'kind'", line)
            kind = lab["kind"]
        edges.append((u, v, EdgeLabel(kind)))
    y = None
    if "y" in obj:
        y = obj["y"]
        _require(isinstance(y, (int, float)) and not isinstance(y, bool), "field 'y' must be a number", line)
        _require(math.isfinite(y), "field 'y' must be finite", line)
        y = float(y)
    try:
        g = LabeledGraph(gid, tuple(nodes), tuple(edges))
    except GraphError as exc:
        raise IngestError(str(exc), line) from None
    return g, y


def parse_graph_jsonl(line: str, lineno: int | None = None) -> tuple[LabeledGraph, float | None]:
    """Parse one JSON-lines record; errors carry ``lineno``."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise IngestError(f"malformed JSON ({exc.msg} at column {exc.colno})", lineno) from None
    return graph_from_json(obj, lineno)


def graph_to_json(g: LabeledGraph, y: float | None = None) -> dict:
    out: dict = {
        "id": g.id,
        "nodes": [{"kind": nl.kind, "attrs": dict(nl.attrs)} if nl.attrs else {"kind": nl.kind} for nl in g.nodes],
        "edges": [[u, v, {"kind": e.kind}] for u, v, e in g.edges],
    }
    if y is not None:
        out["y"] = y
    return out


def dumps_graph(g: LabeledGraph, y: float | None = None) -> str:
    return json.dumps(graph_to_json(g, y), separators=(",", ":"))


def _read_lines(path: str | Path) -> list[str]:
    try:
        return Path(path).read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise IngestError("file not found", source=str(path)) from None
    except UnicodeDecodeError as exc:
        raise IngestError(f"not valid UTF-8 ({exc.reason})", source=str(path)) from None


def load_graph_file(path: str | Path, name: str | None = None) -> Dataset:
    samples = []
    lines = []
    for lineno, text in enumerate(_read_lines(path), start=1):
        if not text.strip():
            continue
        try:
            g, y = parse_graph_jsonl(text, lineno)
        except IngestError as exc:
            raise IngestError(exc.message, lineno, str(path)) from None
        if y is None:
            raise IngestError(f"graph {g.id!r} has no target 'y'", lineno, str(path))
        samples.append((g, y))
        lines.append(lineno)
    return _dataset(samples, lines, name or Path(path).stem, path)


def load_molecule_file(path: str | Path, name: str | None = None) -> Dataset:
    """Records ``<line notation>\\t<y>``; ``#`` lines and blank lines are skipped."""
    samples = []
    lines = []
    for lineno, text in enumerate(_read_lines(path), start=1):
        if not text.strip() or text.startswith("#"):
            continue
        parts = text.split("\t")
        if len(parts) != 2:
            raise IngestError("expected '<line notation>\\t<target>'", lineno, str(path))
        notation, raw_y = parts[0].strip(), parts[1].strip()
        try:
            y = float(raw_y)
        except ValueError:
            raise IngestError(f"target {raw_y!r} is not a number", lineno, str(path)) from None
        if not math.isfinite(y):
            raise IngestError("target must be finite", lineno, str(path))
        try:
            g = parse_molecule(notation, f"L{lineno}")
        except ParseError as exc:
            raise IngestError(str(exc), lineno, str(path)) from None
        samples.append((g, y))
        lines.append(lineno)
    return _dataset(samples, lines, name or Path(path).stem, path)


def _dataset(samples, lines, name, path) -> Dataset:
    try:
        return Dataset(tuple(samples), name, tuple(lines))
    except IngestError as exc:
        raise IngestError(exc.message, exc.line, str(path)) from None


MOLECULE_SUFFIXES = (".smi", ".tsv", ".txt")


def load_dataset(path: str | Path) -> Dataset:
    """Graph JSON lines unless the suffix marks a molecule file."""
    if Path(path).suffix.lower() in MOLECULE_SUFFIXES:
        return load_molecule_file(path)
    return load_graph_file(path)


def write_graph_file(path: str | Path, samples: Sequence[tuple[LabeledGraph, float | None]]) -> None:
    text = "".join(dumps_graph(g, y) + "\n" for g, y in samples)
    Path(path).write_text(text, encoding="utf-8")


__all__ = [
    "Dataset",
    "IngestError",
    "SchmidtRanks",
    "dumps_graph",
    "graph_from_json",
    "graph_to_json",
    "load_dataset",
    "load_graph_file",
    "load_molecule_file",
    "n_qubits",
    "parse_graph_jsonl",
    "write_graph_file",
]
