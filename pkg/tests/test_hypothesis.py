import math
import random
import statistics

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import path
from hypograph.boost import BoostedEnsemble, TreeNode
from hypograph.fingerprint import FeatureMatrix, featurize_dataset
from hypograph.hypothesis import (
    CSV_COLUMNS,
    HypothesisConfig,
    conditional_histogram,
    default_support_min,
    effect_strength,
    generate_hypotheses,
    hypothesis_row,
    render_sentence,
)


def test_all_zero_column_has_no_contrast():
    st_ = effect_strength([0, 0, 0, 0], [1, 2, 3, 4])
    assert st_.no_contrast and math.isnan(st_.s) and st_.direction == "none"
    assert (st_.n1, st_.n0) == (0, 4)


def test_exact_means():
    st_ = effect_strength([0, 0, 1, 1], [1, 1, 5, 5])
    assert st_.s == 4.0 and st_.direction == "increase"
    # pooled sd is zero, so the standardized effect is unbounded
    assert st_.d == math.inf


def test_pooled_sd_against_statistics_module():
    rng = random.Random(0)
    y = [rng.gauss(0, 1) for _ in range(50)]
    col = [rng.random() < 0.4 for _ in range(50)]
    a = [v for v, c in zip(y, col) if c]
    b = [v for v, c in zip(y, col) if not c]
    pooled = math.sqrt(((len(a) - 1) * statistics.variance(a) + (len(b) - 1) * statistics.variance(b))
                       / (len(a) + len(b) - 2))
    res = effect_strength(col, y)
    assert res.s == pytest.approx(statistics.fmean(a) - statistics.fmean(b), abs=1e-12)
    assert res.d == pytest.approx(res.s / pooled, rel=1e-12)


def test_direction_thresholds():
    y = [0.0, 1.0, 0.05, 1.05]
    assert effect_strength([0, 0, 1, 1], y, d_min=0.2).direction == "none"
    assert effect_strength([0, 0, 1, 1], y, d_min=0.05).direction == "increase"
    assert effect_strength([1, 1, 0, 0], y, d_min=0.05).direction == "decrease"


def test_effect_input_validation():
    with pytest.raises(ValueError):
        effect_strength([1], [1.0])
    with pytest.raises(ValueError):
        effect_strength([1, 0, 1], [1.0, 2.0])


def test_planted_effect_recovered():
    r = np.random.default_rng(1)
    col = r.random(2000) < 0.4
    y = 2.0 * col + r.normal(0, 0.25, 2000)
    assert 1.8 <= effect_strength(col, y).s <= 2.2


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(st.booleans(), st.floats(-100, 100)), min_size=2, max_size=40),
       st.floats(0.01, 100))
def test_antisymmetry_and_scale(rows, alpha):
    col = np.array([c for c, _ in rows])
    y = np.array([v for _, v in rows])
    a = effect_strength(col, y)
    b = effect_strength(~col, y)
    if a.no_contrast:
        assert b.no_contrast
        return
    assert b.s == -a.s
    assert (b.n1, b.n0) == (a.n0, a.n1)
    c = effect_strength(col, alpha * y)
    assert c.s == pytest.approx(alpha * a.s, rel=1e-9, abs=1e-9)
    if math.isfinite(a.d) and abs(a.d) > 1e-6:
        assert c.d == pytest.approx(a.d, rel=1e-7)
        if abs(abs(a.d) - 0.2) > 1e-6:
            assert c.direction == a.direction


# ---------------------------------------------------------------------------
# histograms


def test_two_value_histogram():
    h = conditional_histogram([0, 1], [0.0, 1.0], bins=2)
    assert h.counts_true.tolist() == [0, 1]
    assert h.counts_false.tolist() == [1, 0]
    assert h.edges.tolist() == [0.0, 0.5, 1.0]


def test_left_closed_bins():
    # 0.5 sits on an inner edge and belongs to the upper bin; the maximum stays in the last bin
    h = conditional_histogram([1, 1, 1], [0.0, 0.5, 1.0], bins=2)
    assert h.counts_true.tolist() == [1, 2]


def test_degenerate_histogram():
    h = conditional_histogram([1, 0, 1], [3.0, 3.0, 3.0], bins=10)
    assert h.degenerate and h.n_bins == 1
    assert h.counts_true.tolist() == [2] and h.counts_false.tolist() == [1]


def test_histogram_validation():
    with pytest.raises(ValueError):
        conditional_histogram([1], [1.0], bins=1)
    with pytest.raises(ValueError):
        conditional_histogram([], [], bins=4)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(st.booleans(), st.floats(-1e6, 1e6)), min_size=1, max_size=60), st.integers(2, 50))
def test_histogram_partition(rows, bins):
    col = np.array([c for c, _ in rows])
    y = np.array([v for _, v in rows])
    h = conditional_histogram(col, y, bins)
    assert h.counts_true.sum() == col.sum()
    assert h.counts_false.sum() == (~col).sum()
    assert h.edges[0] == y.min() and h.edges[-1] == y.max()
    swapped = conditional_histogram(~col, y, bins)
    assert np.array_equal(swapped.counts_true, h.counts_false)
    # independent binning oracle: np.histogram uses the same left-closed convention
    if not h.degenerate:
        ref, _ = np.histogram(y[col], bins=h.edges)
        assert np.array_equal(ref, h.counts_true)


def test_bimodal_conditional_means():
    r = np.random.default_rng(2)
    col = r.random(2000) < 0.5
    y = 1.5 * col + r.normal(0, 0.25, 2000)
    h = conditional_histogram(col, y, 40)
    centers = (h.edges[:-1] + h.edges[1:]) / 2
    m1 = (centers * h.counts_true).sum() / h.counts_true.sum()
    m0 = (centers * h.counts_false).sum() / h.counts_false.sum()
    assert abs((m1 - m0) - 1.5) <= 0.3


# ---------------------------------------------------------------------------
# hypotheses


def _stump(fid, gain=1.0, n=0):
    return TreeNode(feature=fid, left=TreeNode(value=0.0), right=TreeNode(value=1.0), gain=gain, n_samples=n)


def _setup():
    graphs = [path("C", "O", graph_id=f"a{i}") for i in range(20)] + [path("C", "N", graph_id=f"b{i}") for i in range(20)]
    X, reg = featurize_dataset(graphs, 1)
    y = np.array([1.0 + 0.01 * i for i in range(20)] + [0.0 + 0.01 * i for i in range(20)])
    return graphs, X, reg, y


def test_single_feature_hypothesis():
    graphs, X, reg, y = _setup()
    fid = next(f for f in X.row_ids(0) if not X.column(f)[20:].any())
    e = BoostedEnsemble(c0=0.5, stages=[(_stump(fid), 0.1)], n_train=40)
    hs = generate_hypotheses(e, X, y, reg)
    assert len(hs) == 1
    h = hs[0]
    assert h.rank == 1 and h.importance == 1.0 and h.stats.direction == "increase"
    assert h.stats.s == pytest.approx(1.0)
    assert h.sentence.startswith(f"Feature 0x{fid:016x} (")
    assert "leads to increase of the target property" in h.sentence
    row = hypothesis_row(h)
    assert len(row) == len(CSV_COLUMNS) and row[1] == f"0x{fid:016x}"


def test_empty_table_gives_no_hypotheses():
    _, X, reg, y = _setup()
    assert generate_hypotheses(BoostedEnsemble(c0=0.0, n_train=40), X, y, reg) == []


def test_support_filter():
    graphs = [path("C", "O", graph_id=f"a{i}") for i in range(2)] + [path("C", "N", graph_id=f"b{i}") for i in range(1998)]
    X, reg = featurize_dataset(graphs, 0)
    y = np.r_[np.full(2, 10.0), np.zeros(1998)]
    oxygen = next(f for f in X.row_ids(0) if not X.column(f)[2:].any())
    e = BoostedEnsemble(c0=0.0, stages=[(_stump(oxygen), 1.0)], n_train=2000)
    assert default_support_min(2000) == 10
    assert generate_hypotheses(e, X, y, reg) == []
    assert len(generate_hypotheses(e, X, y, reg, HypothesisConfig(support_min=2))) == 1


def test_suppressed_kept_only_on_request():
    graphs, X, reg, y = _setup()
    flat = np.zeros(40)
    carbon = next(f for f in X.row_ids(0) if X.column(f).all())
    oxygen = next(f for f in X.row_ids(0) if not X.column(f)[20:].any())
    nitrogen = next(f for f in X.row_ids(20) if not X.column(f)[:20].any())
    e = BoostedEnsemble(c0=0.0, stages=[(_stump(oxygen, 2.0), 1.0), (_stump(nitrogen, 1.0), 1.0)], n_train=40)
    y2 = flat.copy()
    y2[:20] = np.linspace(0, 1, 20)
    y2[20:] = np.linspace(0, 1, 20)
    # no contrast between the two halves -> both suppressed
    assert generate_hypotheses(e, X, y2, reg) == []
    kept = generate_hypotheses(e, X, y2, reg, include_suppressed=True)
    assert [h.suppressed for h in kept] == [True, True]
    assert [h.rank for h in kept] == [0, 0]
    # contrasting targets -> two ranked hypotheses with opposite signs
    hs = generate_hypotheses(e, X, y, reg)
    assert [h.rank for h in hs] == [1, 2]
    assert [h.stats.direction for h in hs] == ["increase", "decrease"]
    assert carbon not in [h.feature for h in hs]


def test_ranking_deterministic_and_top_k():
    graphs, X, reg, y = _setup()
    oxygen = next(f for f in X.row_ids(0) if not X.column(f)[20:].any())
    nitrogen = next(f for f in X.row_ids(20) if not X.column(f)[:20].any())
    e = BoostedEnsemble(c0=0.0, stages=[(_stump(nitrogen, 1.0), 1.0), (_stump(oxygen, 3.0), 1.0)], n_train=40)
    a = generate_hypotheses(e, X, y, reg)
    b = generate_hypotheses(e, X, y, reg)
    assert [h.to_json() for h in a] == [h.to_json() for h in b]
    assert a[0].feature == oxygen and a[0].importance == pytest.approx(0.75)
    assert [h.feature for h in generate_hypotheses(e, X, y, reg, HypothesisConfig(top_k=1))] == [oxygen]


def test_sentence_format():
    st_ = effect_strength([0, 0, 1, 1], [1.0, 1.2, 2.0, 2.4])
    text = render_sentence("0x00000000000000ff", "C(-O)", st_, "band gap")
    assert text.startswith("Feature 0x00000000000000ff (C(-O)) leads to increase of band gap (s = 1.1, d = ")
    assert text.endswith("support = 2/4)")
