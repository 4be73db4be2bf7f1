"""Effect statistics, conditional histograms and ranked hypothesis sentences."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from hypograph.boost import BoostedEnsemble, importances, ranked_features
from hypograph.fingerprint import FeatureMatrix, SubgraphRegistry, format_id
from hypograph.graph import canonical_text

DEFAULT_TOP_K = 30
DEFAULT_D_MIN = 0.2
DEFAULT_BINS = 40
DIRECTIONS = ("increase", "decrease", "none")


def default_support_min(n: int) -> int:
    return max(5, math.ceil(0.005 * n))


@dataclass(frozen=True)
class EffectStats:
    """Contrast of targets between rows where an expression holds (1) or not (0).

    ``s`` is the difference of conditional means; ``d`` divides it by the
    pooled (unbiased) standard deviation. When one side is empty ``s`` and
    ``d`` are NaN and ``no_contrast`` is set.
    """

    n1: int
    n0: int
    mean1: float
    mean0: float
    s: float
    d: float
    direction: str
    no_contrast: bool = False

    @property
    def n(self) -> int:
        return self.n1 + self.n0

    def to_json(self) -> dict:
        return {
            "n1": self.n1,
            "n0": self.n0,
            "mean1": _num(self.mean1),
            "mean0": _num(self.mean0),
            "s": _num(self.s),
            "d": _num(self.d),
            "direction": self.direction,
            "no_contrast": self.no_contrast,
        }


def _num(x: float):
    """JSON-safe float: non-finite values become strings."""
    x = float(x)
    if math.isfinite(x):
        return x
    return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")


def _mean(values: np.ndarray) -> float:
    return math.fsum(values.tolist()) / len(values) if len(values) else math.nan


def effect_strength(column: Sequence[bool], y: Sequence[float], d_min: float = DEFAULT_D_MIN) -> EffectStats:
    column = np.asarray(column, dtype=bool)
    y = np.asarray(y, dtype=float)
    if column.shape != y.shape or len(y) < 2:
        raise ValueError("column and targets must have the same length >= 2")
    y1, y0 = y[column], y[~column]
    n1, n0 = len(y1), len(y0)
    mean1, mean0 = _mean(y1), _mean(y0)
    if n1 == 0 or n0 == 0:
        return EffectStats(n1, n0, mean1, mean0, math.nan, math.nan, "none", True)
    s = mean1 - mean0
    ss = math.fsum(((y1 - mean1) ** 2).tolist()) + math.fsum(((y0 - mean0) ** 2).tolist())
    dof = n1 + n0 - 2
    sd = math.sqrt(ss / dof) if dof > 0 else 0.0
    if sd > 0:
        d = s / sd
    else:
        d = math.copysign(math.inf, s) if s != 0 else 0.0
    if abs(d) < d_min or s == 0:
        direction = "none"
    else:
        direction = "increase" if s > 0 else "decrease"
    return EffectStats(n1, n0, mean1, mean0, s, d, direction)


@dataclass(frozen=True)
class HistogramPair:
    edges: np.ndarray
    counts_true: np.ndarray
    counts_false: np.ndarray
    degenerate: bool = False

    @property
    def n_bins(self) -> int:
        return len(self.counts_true)

    def to_json(self) -> dict:
        return {
            "edges": [float(e) for e in self.edges],
            "counts_true": [int(c) for c in self.counts_true],
            "counts_false": [int(c) for c in self.counts_false],
            "degenerate": self.degenerate,
        }


def conditional_histogram(column: Sequence[bool], y: Sequence[float], bins: int = DEFAULT_BINS) -> HistogramPair:
    """Equal-width bins over [min y, max y]; left-closed, the last bin closed on both ends.

    If every target is equal there is a single zero-width bin holding all rows.
    """
    if bins < 2:
        raise ValueError("bins must be >= 2")
    column = np.asarray(column, dtype=bool)
    y = np.asarray(y, dtype=float)
    if column.shape != y.shape or len(y) == 0:
        raise ValueError("column and targets must have the same non-zero length")
    lo, hi = float(y.min()), float(y.max())
    if lo == hi:
        edges = np.array([lo, hi])
        idx = np.zeros(len(y), dtype=np.int64)
        n_bins, degenerate = 1, True
    else:
        edges = np.linspace(lo, hi, bins + 1)
        idx = np.searchsorted(edges, y, side="right") - 1
        idx = np.clip(idx, 0, bins - 1)
        n_bins, degenerate = bins, False
    counts_true = np.bincount(idx[column], minlength=n_bins)
    counts_false = np.bincount(idx[~column], minlength=n_bins)
    return HistogramPair(edges, counts_true, counts_false, degenerate)


@dataclass(frozen=True)
class Hypothesis:
    rank: int
    feature: int
    stats: EffectStats
    importance: float
    subgraph: str
    histogram: HistogramPair
    sentence: str
    suppressed: bool = field(default=False)

    @property
    def feature_expr(self) -> str:
        return format_id(self.feature)

    def to_json(self) -> dict:
        return {
            "rank": self.rank,
            "feature_expr": self.feature_expr,
            "subgraph_canonical": self.subgraph,
            "importance": self.importance,
            "sentence": self.sentence,
            "suppressed": self.suppressed,
            **self.stats.to_json(),
            "histogram": self.histogram.to_json(),
        }


def _fmt(x: float) -> str:
    return f"{x:.3g}" if math.isfinite(x) else str(_num(x))


def render_sentence(feature: str, subgraph: str, stats: EffectStats, prop: str = "the target property") -> str:
    return (
        f"Feature {feature} ({subgraph}) leads to {stats.direction} of {prop} "
        f"(s = {_fmt(stats.s)}, d = {_fmt(stats.d)}, support = {stats.n1}/{stats.n})"
    )


@dataclass(frozen=True)
class HypothesisConfig:
    top_k: int = DEFAULT_TOP_K
    d_min: float = DEFAULT_D_MIN
    support_min: int | None = None
    bins: int = DEFAULT_BINS
    property_name: str = "the target property"

    def resolved_support(self, n: int) -> int:
        return default_support_min(n) if self.support_min is None else self.support_min


def generate_hypotheses(
    e: BoostedEnsemble,
    X: FeatureMatrix,
    y: Sequence[float],
    registry: SubgraphRegistry,
    config: HypothesisConfig | None = None,
    include_suppressed: bool = False,
    table: dict[int, float] | None = None,
) -> list[Hypothesis]:
    """Top-k features by importance that pass the support filter on both sides.

    Hypotheses with direction ``none`` are dropped unless ``include_suppressed``
    is set (then they are returned with ``suppressed=True``). Ranks count only
    unsuppressed hypotheses; suppressed ones get rank 0.
    """
    config = config or HypothesisConfig()
    y = np.asarray(y, dtype=float)
    table = importances(e, X) if table is None else table
    if not table:
        return []
    support_min = config.resolved_support(len(y))
    out = []
    rank = 0
    for fid in ranked_features(table)[: config.top_k]:
        column = X.column(fid)
        stats = effect_strength(column, y, config.d_min)
        if stats.n1 < support_min or stats.n0 < support_min:
            continue
        suppressed = stats.direction == "none"
        if suppressed and not include_suppressed:
            continue
        if not suppressed:
            rank += 1
        subgraph = canonical_text(registry[fid]) if fid in registry else "?"
        out.append(
            Hypothesis(
                0 if suppressed else rank,
                fid,
                stats,
                table[fid],
                subgraph,
                conditional_histogram(column, y, config.bins),
                render_sentence(format_id(fid), subgraph, stats, config.property_name),
                suppressed,
            )
        )
    return out


CSV_COLUMNS = ("rank", "feature_expr", "subgraph_canonical", "importance", "s", "d", "n1", "n0", "mean1", "mean0")


def hypothesis_row(h: Hypothesis) -> list:
    st = h.stats
    return [h.rank, h.feature_expr, h.subgraph, repr(h.importance), repr(st.s), repr(st.d), st.n1, st.n0,
            repr(st.mean1), repr(st.mean0)]


__all__ = [
    "CSV_COLUMNS",
    "EffectStats",
    "HistogramPair",
    "Hypothesis",
    "HypothesisConfig",
    "conditional_histogram",
    "default_support_min",
    "effect_strength",
    "generate_hypotheses",
    "hypothesis_row",
    "render_sentence",
]
