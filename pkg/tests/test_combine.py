import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypograph.combine import (
    CSV_COLUMNS,
    CombineConfig,
    LogicalExpr,
    enumerate_expressions,
    eval_columns,
    eval_expr,
    macro_row,
    search_macro_features,
)
from hypograph.fingerprint import FeatureMatrix

F, G, H = 11, 22, 33


def test_basic_semantics():
    assert eval_expr(LogicalExpr("AND", ((F, False), (G, False))), {F, G})
    assert not eval_expr(LogicalExpr("XOR", ((F, False), (G, False))), {F, G})
    assert eval_expr(LogicalExpr("AND", ((F, True), (G, True))), set())
    assert eval_expr(LogicalExpr("OR", ((F, False), (G, True))), set())


def test_literal_order_normalized():
    assert LogicalExpr("AND", ((G, False), (F, False))) == LogicalExpr("AND", ((F, False), (G, False)))


def test_xor_negation_folding():
    assert LogicalExpr("XOR", ((F, True), (G, True))) == LogicalExpr("XOR", ((F, False), (G, False)))
    odd = LogicalExpr("XOR", ((F, True), (G, False)))
    assert odd == LogicalExpr("XOR", ((F, False), (G, True)))
    for row in (set(), {F}, {G}, {F, G}):
        assert eval_expr(odd, row) == ((F in row) == (G in row))


def test_invalid_expressions():
    with pytest.raises(ValueError):
        LogicalExpr("NAND", ((F, False), (G, False)))
    with pytest.raises(ValueError):
        LogicalExpr("AND", ((F, False), (F, True)))
    with pytest.raises(ValueError):
        LogicalExpr("AND", ((F, False),))


def test_text_form():
    e = LogicalExpr("AND", ((F, True), (G, True)))
    assert e.text() == "AND(NOT 0x000000000000000b, NOT 0x0000000000000016)"


def _truth_table(expr, feats):
    return tuple(eval_expr(expr, {f for f, bit in zip(feats, bits) if bit})
                 for bits in itertools.product((0, 1), repeat=len(feats)))


@pytest.mark.parametrize("arity", [2, 3])
def test_enumeration_has_no_equivalent_duplicates(arity):
    feats = [F, G, H, 44][: arity + 1]
    exprs = enumerate_expressions(feats, arity=arity)
    by_subset = {}
    for e in exprs:
        by_subset.setdefault(e.features, []).append(_truth_table(e, e.features))
    for tables in by_subset.values():
        assert len(tables) == len(set(tables))
    per_subset = 2**arity * 2 + 1
    assert len(exprs) == math.comb(len(feats), arity) * per_subset


def test_enumeration_covers_absence_pair():
    exprs = enumerate_expressions([F, G])
    assert LogicalExpr("AND", ((F, True), (G, True))) in exprs
    assert len(exprs) == 9


@settings(max_examples=200, deadline=None)
@given(st.sets(st.sampled_from([F, G, 99])), st.booleans(), st.booleans())
def test_de_morgan(row, nf, ng):
    a = LogicalExpr("AND", ((F, nf), (G, ng)))
    o = LogicalExpr("OR", ((F, not nf), (G, not ng)))
    assert eval_expr(a, row) == (not eval_expr(o, row))
    x = LogicalExpr("XOR", ((F, nf), (G, ng)))
    assert eval_expr(x, row) == (((F in row) != nf) != ((G in row) != ng))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sets(st.sampled_from([F, G, H])), min_size=1, max_size=30))
def test_vectorized_matches_rowwise(rows):
    X = FeatureMatrix.from_sets(rows)
    cols = dict(zip([F, G, H], X.columns([F, G, H]).T))
    for e in enumerate_expressions([F, G, H], arity=2) + enumerate_expressions([F, G, H], arity=3):
        assert eval_columns(e, cols).tolist() == [eval_expr(e, r) for r in rows]


def _planted(rule, n=800, seed=0, noise=0.25):
    r = np.random.default_rng(seed)
    f = r.random(n) < 0.5
    g = r.random(n) < 0.5
    decoy = r.random(n) < 0.3
    rows = [{fid for fid, bit in ((F, fi), (G, gi), (H, di)) if bit} for fi, gi, di in zip(f, g, decoy)]
    y = rule(f, g) + r.normal(0, noise, n)
    return FeatureMatrix.from_sets(rows), y


def test_planted_xor_ranks_first():
    X, y = _planted(lambda f, g: 1.0 + 2.0 * (f ^ g))
    res = search_macro_features([F, G, H], X, y)
    top = res[0]
    assert top.expr == LogicalExpr("XOR", ((F, False), (G, False)))
    assert top.stats.d > 1.5


def test_planted_absence_pair():
    X, y = _planted(lambda f, g: -2.0 * (~f & ~g))
    res = search_macro_features([F, G, H], X, y)
    texts = [m.expr for m in res[:3]]
    absence = LogicalExpr("AND", ((F, True), (G, True)))
    assert absence in texts
    m = next(m for m in res if m.expr == absence)
    assert m.stats.s < 0


def test_no_interaction_no_gain():
    X, y = _planted(lambda f, g: 2.0 * f)
    res = search_macro_features([F, G, H], X, y)
    assert all(F not in m.expr.features for m in res)


def test_output_deterministic_and_ordered():
    X, y = _planted(lambda f, g: 1.0 * (f & g), seed=3)
    a = search_macro_features([F, G, H], X, y, CombineConfig(gain_min=-10))
    b = search_macro_features([H, G, F], X, y, CombineConfig(gain_min=-10))
    assert [m.to_json() for m in a] == [m.to_json() for m in b]
    keys = [(-m.gain, -abs(m.stats.d), m.expr.text()) for m in a]
    assert keys == sorted(keys)


def test_support_filter_and_small_inputs():
    X, y = _planted(lambda f, g: 2.0 * (f & g))
    assert search_macro_features([F], X, y) == []
    assert search_macro_features([F, G], X, y, CombineConfig(support_min=10_000)) == []


def test_triples_need_small_k():
    with pytest.raises(ValueError):
        CombineConfig(k=30, triples=True)
    CombineConfig(k=15, triples=True)
    with pytest.raises(ValueError):
        CombineConfig(ops=("NAND",))
    with pytest.raises(ValueError):
        CombineConfig(k=1)


def test_k_limits_candidates():
    X, y = _planted(lambda f, g: 2.0 * (f ^ g))
    res = search_macro_features([F, H, G], X, y, CombineConfig(k=2))
    assert all(G not in m.expr.features for m in res)


def test_csv_row():
    X, y = _planted(lambda f, g: 2.0 * (f ^ g))
    m = search_macro_features([F, G], X, y)[0]
    row = macro_row(1, m)
    assert len(row) == len(CSV_COLUMNS)
    assert row[1] == "XOR(0x000000000000000b, 0x0000000000000016)"
