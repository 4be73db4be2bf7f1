"""Boolean macro-features: pairs (optionally triples) of important features whose
combination separates the targets better than either constituent alone."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from hypograph.fingerprint import FeatureMatrix, format_id
from hypograph.hypothesis import DEFAULT_D_MIN, EffectStats, default_support_min, effect_strength

OPS = ("AND", "OR", "XOR")
DEFAULT_K = 30
DEFAULT_GAIN_MIN = 0.1
TRIPLE_K_MAX = 15

Literal = tuple[int, bool]  # (feature id, negated)


@dataclass(frozen=True)
class LogicalExpr:
    op: str
    literals: tuple[Literal, ...]

    def __post_init__(self):
        if self.op not in OPS:
            raise ValueError(f"unknown operator {self.op!r}")
        lits = tuple((int(f), bool(neg)) for f, neg in self.literals)
        if len(lits) < 2:
            raise ValueError("an expression needs at least two literals")
        if len({f for f, _ in lits}) != len(lits):
            raise ValueError("literals must reference distinct features")
        if self.op == "XOR":
            # XOR(not a, not b) == XOR(a, b); an odd number of negations is
            # the complement, which is stored as a negated last literal
            parity = sum(neg for _, neg in lits) % 2
            lits = tuple((f, False) for f, _ in lits)
            lits = tuple(sorted(lits))
            if parity:
                lits = lits[:-1] + ((lits[-1][0], True),)
        else:
            lits = tuple(sorted(lits))
        object.__setattr__(self, "literals", lits)

    @property
    def features(self) -> tuple[int, ...]:
        return tuple(f for f, _ in self.literals)

    def text(self) -> str:
        parts = [("NOT " if neg else "") + format_id(f) for f, neg in self.literals]
        return f"{self.op}({', '.join(parts)})"

    def __str__(self) -> str:
        return self.text()


def _literal(value: bool, negated: bool) -> bool:
    return value != negated


def eval_expr(expr: LogicalExpr, row: Iterable[int]) -> bool:
    row = row if isinstance(row, (set, frozenset)) else set(row)
    values = [_literal(f in row, neg) for f, neg in expr.literals]
    if expr.op == "AND":
        return all(values)
    if expr.op == "OR":
        return any(values)
    return sum(values) % 2 == 1


def eval_columns(expr: LogicalExpr, columns: dict[int, np.ndarray]) -> np.ndarray:
    """Vectorized ``eval_expr`` given each feature's presence column."""
    values = [columns[f] ^ neg for f, neg in expr.literals]
    if expr.op == "AND":
        return np.logical_and.reduce(values)
    if expr.op == "OR":
        return np.logical_or.reduce(values)
    return np.logical_xor.reduce(values)


def enumerate_expressions(features: Sequence[int], ops: Sequence[str] = OPS, arity: int = 2) -> list[LogicalExpr]:
    """All distinct expressions over ``arity``-subsets of ``features``.

    AND/OR take every sign pattern; XOR is negation-symmetric, so only the
    un-negated form is produced.
    """
    seen = set()
    out = []
    for combo in itertools.combinations(sorted(set(features)), arity):
        for op in ops:
            patterns = [(False,) * arity] if op == "XOR" else itertools.product((False, True), repeat=arity)
            for signs in patterns:
                expr = LogicalExpr(op, tuple(zip(combo, signs)))
                if expr not in seen:
                    seen.add(expr)
                    out.append(expr)
    return out


@dataclass(frozen=True)
class CombineConfig:
    k: int = DEFAULT_K
    ops: tuple[str, ...] = OPS
    gain_min: float = DEFAULT_GAIN_MIN
    support_min: int | None = None
    d_min: float = DEFAULT_D_MIN
    triples: bool = False

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        for op in self.ops:
            if op not in OPS:
                raise ValueError(f"unknown operator {op!r}; choose from {', '.join(OPS)}")
        if self.k < 2:
            raise ValueError("K must be >= 2")
        if self.triples and self.k > TRIPLE_K_MAX:
            raise ValueError(f"triples need K <= {TRIPLE_K_MAX}")


@dataclass(frozen=True)
class MacroFeature:
    expr: LogicalExpr
    stats: EffectStats
    gain: float

    def to_json(self) -> dict:
        return {"expr": self.expr.text(), "gain": self.gain, **self.stats.to_json()}


def _abs_d(stats: EffectStats) -> float:
    return 0.0 if stats.no_contrast or math.isnan(stats.d) else abs(stats.d)


def search_macro_features(
    candidates: Sequence[int],
    X: FeatureMatrix,
    y: Sequence[float],
    config: CombineConfig | None = None,
) -> list[MacroFeature]:
    """Rank expressions over the first ``K`` candidates by interaction gain.

    gain = |d(expr)| - max |d(literal)|. Kept when gain >= gain_min and both
    sides of the expression meet the support minimum. Ordered by gain, then
    |d|, then expression text.
    """
    config = config or CombineConfig()
    y = np.asarray(y, dtype=float)
    features = list(dict.fromkeys(int(f) for f in candidates))[: config.k]
    if len(features) < 2:
        return []
    support_min = default_support_min(len(y)) if config.support_min is None else config.support_min
    columns = dict(zip(features, X.columns(features).T))
    literal_d = {f: _abs_d(effect_strength(columns[f], y, config.d_min)) for f in features}
    exprs = enumerate_expressions(features, config.ops, 2)
    if config.triples:
        exprs += enumerate_expressions(features, config.ops, 3)
    results = []
    for expr in exprs:
        col = eval_columns(expr, columns)
        n1 = int(col.sum())
        if n1 < support_min or len(y) - n1 < support_min:
            continue
        stats = effect_strength(col, y, config.d_min)
        gain = _abs_d(stats) - max(literal_d[f] for f in expr.features)
        if gain >= config.gain_min:
            results.append(MacroFeature(expr, stats, gain))
    results.sort(key=lambda m: (-m.gain, -_abs_d(m.stats), m.expr.text()))
    return results


CSV_COLUMNS = ("rank", "expr", "gain", "s", "d", "n1", "n0", "mean1", "mean0", "direction")


def macro_row(rank: int, m: MacroFeature) -> list:
    st = m.stats
    return [rank, m.expr.text(), repr(m.gain), repr(st.s), repr(st.d), st.n1, st.n0, repr(st.mean1),
            repr(st.mean0), st.direction]


__all__ = [
    "OPS",
    "CombineConfig",
    "LogicalExpr",
    "MacroFeature",
    "enumerate_expressions",
    "eval_columns",
    "eval_expr",
    "macro_row",
    "search_macro_features",
]
