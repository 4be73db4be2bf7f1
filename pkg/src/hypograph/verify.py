"""Hypothesis checks by (a) single-edit mutations scored by an oracle and
(b) matched pairs of near-identical samples inside the dataset."""
from __future__ import annotations

import json
import math
import random
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from hypograph.fingerprint import FeatureMatrix, SubgraphRegistry, format_id
from hypograph.graph import (
    EnvironmentDescriptor,
    LabeledGraph,
    MutationError,
    Mutator,
    MutationSpec,
    contains_environment,
)
from hypograph.ingest import Dataset, graph_to_json

DEFAULT_TAU = 2
DEFAULT_ATTEMPTS = 200
DEFAULT_MIN_PAIRS = 10
SCOPES = ("top", "all")


class OracleError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# oracles


class SynthOracle:
    """Noiseless planted-rule evaluation, loaded from a ground-truth file."""

    def __init__(self, rules, baseline: float = 0.0):
        self.rules = tuple(rules)
        self.baseline = baseline

    @classmethod
    def load(cls, path: str | Path) -> "SynthOracle":
        from hypograph.synth import GroundTruth

        truth = GroundTruth.load(path)
        return cls(truth.rules, truth.baseline)

    def __call__(self, g: LabeledGraph) -> float:
        from hypograph.synth import oracle_eval

        return oracle_eval(g, self.rules, self.baseline)


class CommandOracle:
    """External program: one graph JSON object on stdin, one number on stdout."""

    def __init__(self, argv: Sequence[str], timeout: float = 60.0):
        self.argv = list(argv)
        self.timeout = timeout

    def __call__(self, g: LabeledGraph) -> float:
        payload = json.dumps(graph_to_json(g), separators=(",", ":"))
        try:
            proc = subprocess.run(self.argv, input=payload, capture_output=True, text=True, timeout=self.timeout)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise OracleError(f"oracle could not run: {exc}") from None
        if proc.returncode != 0:
            raise OracleError(f"oracle exited with status {proc.returncode}: {proc.stderr.strip()[:200]}")
        try:
            value = float(proc.stdout.strip())
        except ValueError:
            raise OracleError(f"oracle printed {proc.stdout.strip()[:50]!r}, not a number") from None
        if not math.isfinite(value):
            raise OracleError("oracle returned a non-finite value")
        return value


def make_oracle(spec: str) -> Callable[[LabeledGraph], float]:
    """``synth:<ground_truth.json>`` or a shell-free command line split on spaces."""
    if spec.startswith("synth:"):
        return SynthOracle.load(spec[len("synth:"):])
    argv = spec.split()
    if not argv:
        raise ValueError("empty oracle command")
    return CommandOracle(argv)


# ---------------------------------------------------------------------------
# reports


@dataclass
class VerificationReport:
    hypothesis: str
    protocol: str
    direction: str
    pairs: list[dict] = field(default_factory=list)
    min_pairs: int = DEFAULT_MIN_PAIRS
    n_candidates: int = 0
    n_errors: int = 0
    config: dict = field(default_factory=dict)

    @property
    def n_pairs(self) -> int:
        return sum(1 for p in self.pairs if "delta" in p)

    @property
    def effect(self) -> float:
        deltas = [p["delta"] for p in self.pairs if "delta" in p]
        return math.fsum(deltas) / len(deltas) if deltas else math.nan

    @property
    def degenerate(self) -> bool:
        return self.n_pairs == 0

    @property
    def yield_(self) -> float:
        return self.n_pairs / self.n_candidates if self.n_candidates else 0.0

    @property
    def agreement(self) -> bool | None:
        if self.n_pairs < self.min_pairs:
            return None
        eff = self.effect
        if self.direction == "increase":
            return eff > 0
        if self.direction == "decrease":
            return eff < 0
        return False

    def to_json(self) -> dict:
        eff = self.effect
        return {
            "hypothesis": self.hypothesis,
            "protocol": self.protocol,
            "direction": self.direction,
            "n_pairs": self.n_pairs,
            "effect": eff if math.isfinite(eff) else None,
            "agreement": self.agreement,
            "degenerate": self.degenerate,
            "min_pairs": self.min_pairs,
            "n_candidates": self.n_candidates,
            "n_errors": self.n_errors,
            "yield": self.yield_,
            "config": self.config,
            "pairs": self.pairs,
        }


# ---------------------------------------------------------------------------
# matched pairs


@dataclass(frozen=True)
class MatchConfig:
    tau: int = DEFAULT_TAU
    scope: str = "top"
    min_pairs: int = DEFAULT_MIN_PAIRS

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("tau must be >= 0")
        if self.scope not in SCOPES:
            raise ValueError(f"scope must be one of {', '.join(SCOPES)}")


def _hamming_dense(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = a.astype(np.int32)
    b = b.astype(np.int32)
    return a.sum(1)[:, None] + b.sum(1)[None, :] - 2 * (a @ b.T)


def _hamming_sparse(X: FeatureMatrix, rows_a, rows_b, exclude: int | None) -> np.ndarray:
    m = X.to_scipy().tocsc()
    if exclude is not None:
        keep = np.ones(X.n_features, dtype=bool)
        keep[exclude] = False
        m = m[:, np.flatnonzero(keep)]
    m = m.tocsr()
    a = m[rows_a]
    b = m[rows_b]
    common = (a @ b.T).toarray()
    na = np.asarray(a.sum(1)).ravel()
    nb = np.asarray(b.sum(1)).ravel()
    return na[:, None] + nb[None, :] - 2 * common


def matched_pairs(
    ds: Dataset,
    X: FeatureMatrix,
    feature: int,
    config: MatchConfig | None = None,
    context: Sequence[int] = (),
    direction: str = "none",
) -> VerificationReport:
    """Greedy one-to-one matching of samples with the feature to samples without it.

    Distance is the Hamming distance over the ``context`` features (scope
    ``top``) or over every other vocabulary feature (scope ``all``). Candidate
    pairs with distance <= tau are taken in order of (distance, present sample,
    absent sample); each sample is used at most once.
    """
    config = config or MatchConfig()
    y = ds.targets
    col = X.column(feature)
    present = np.flatnonzero(col)
    absent = np.flatnonzero(~col)
    report = VerificationReport(
        format_id(feature), "matched-pair", direction, min_pairs=config.min_pairs,
        n_candidates=len(present), config={"tau": config.tau, "scope": config.scope},
    )
    if len(present) == 0 or len(absent) == 0:
        return report
    if config.scope == "top":
        others = [f for f in dict.fromkeys(int(c) for c in context) if f != feature]
        block = X.columns(others)
        dist = _hamming_dense(block[present], block[absent])
    else:
        dist = _hamming_sparse(X, present, absent, X.feature_index(feature))
    pi, ai = np.nonzero(dist <= config.tau)
    d = dist[pi, ai]
    order = np.lexsort((absent[ai], present[pi], d))
    used_p: set[int] = set()
    used_a: set[int] = set()
    graphs = ds.graphs
    for k in order:
        p, a = int(present[pi[k]]), int(absent[ai[k]])
        if p in used_p or a in used_a:
            continue
        used_p.add(p)
        used_a.add(a)
        report.pairs.append({
            "with": graphs[p].id,
            "without": graphs[a].id,
            "distance": int(d[k]),
            "y_with": float(y[p]),
            "y_without": float(y[a]),
            "delta": float(y[p] - y[a]),
        })
    return report


# ---------------------------------------------------------------------------
# mutation protocol


@dataclass(frozen=True)
class MutationConfig:
    attempts: int = DEFAULT_ATTEMPTS
    seed: int = 0
    max_samples: int | None = None
    min_pairs: int = DEFAULT_MIN_PAIRS
    threads: int = 1

    def __post_init__(self):
        if self.attempts < 1:
            raise ValueError("attempts must be >= 1")
        if self.max_samples is not None and self.max_samples < 1:
            raise ValueError("max_samples must be >= 1")


def independent_context(
    target: EnvironmentDescriptor, context: Sequence[int], registry: SubgraphRegistry, feature: int
) -> list[tuple[int, EnvironmentDescriptor]]:
    """Context features that can be held fixed while the target flips.

    A context environment that itself contains the target environment cannot
    stay present once the target disappears, so it is left out of the check.
    """
    out = []
    for fid in dict.fromkeys(int(c) for c in context):
        if fid == feature or fid not in registry:
            continue
        env = registry[fid]
        if contains_environment(env.to_graph(), target):
            continue
        out.append((fid, env))
    return out


def _sample_order(n: int, config: MutationConfig) -> list[int]:
    if config.max_samples is None or config.max_samples >= n:
        return list(range(n))
    rng = random.Random(config.seed)
    return sorted(rng.sample(range(n), config.max_samples))


def mutation_test(
    ds: Dataset,
    feature: int,
    oracle: Callable[[LabeledGraph], float],
    registry: SubgraphRegistry,
    config: MutationConfig | None = None,
    context: Sequence[int] = (),
    direction: str = "none",
    spec: MutationSpec | None = None,
) -> VerificationReport:
    """Pair each sample with a single-edit mutant in which only the target bit flips.

    Every attempt proposes one edit of the original sample (seeded per sample).
    The first mutant whose target presence differs and whose independent
    context bits are unchanged is scored with the oracle, as is the original.
    """
    config = config or MutationConfig()
    target = registry[feature]
    fixed = independent_context(target, context, registry, feature)
    spec = spec or MutationSpec.from_graphs(ds.graphs)
    graphs = ds.graphs
    order = _sample_order(len(graphs), config)
    report = VerificationReport(
        format_id(feature), "mutation", direction, min_pairs=config.min_pairs, n_candidates=len(order),
        config={
            "attempts": config.attempts,
            "seed": config.seed,
            "max_samples": config.max_samples,
            "held_fixed": [format_id(f) for f, _ in fixed],
        },
    )

    def run(i: int) -> dict | None:
        g = graphs[i]
        rng = random.Random(f"{config.seed}:{i}")
        had = contains_environment(g, target)
        context_bits = [contains_environment(g, env) for _, env in fixed]
        try:
            mutator = Mutator(g, spec)
        except MutationError:
            return None
        for attempt in range(1, config.attempts + 1):
            try:
                mutant, edit = mutator.propose(rng)
            except MutationError:
                return None
            if contains_environment(mutant, target) == had:
                continue
            if any(contains_environment(mutant, env) != bit for (_, env), bit in zip(fixed, context_bits)):
                continue
            with_g, without_g = (g, mutant) if had else (mutant, g)
            record = {"sample": g.id, "attempts": attempt, "edit": edit.kind, "detail": list(edit.detail),
                      "original_has_feature": had}
            try:
                y_with, y_without = oracle(with_g), oracle(without_g)
            except OracleError as exc:
                record["error"] = str(exc)
                return record
            record.update({"y_with": y_with, "y_without": y_without, "delta": y_with - y_without})
            return record
        return None

    if config.threads > 1:
        with ThreadPoolExecutor(config.threads) as pool:
            records = list(pool.map(run, order))
    else:
        records = [run(i) for i in order]
    for rec in records:
        if rec is None:
            continue
        report.pairs.append(rec)
        if "error" in rec:
            report.n_errors += 1
    return report


__all__ = [
    "CommandOracle",
    "MatchConfig",
    "MutationConfig",
    "OracleError",
    "SynthOracle",
    "VerificationReport",
    "independent_context",
    "make_oracle",
    "matched_pairs",
    "mutation_test",
]
