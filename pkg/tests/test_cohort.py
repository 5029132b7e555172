from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hashsem.cohort import (
    CohortError,
    ImprovementRecord,
    cohort_analysis,
    score_improvement,
    split_top_decile,
    top_decile_rates,
)
from hashsem.graph import InteractionSets
from oracles import mae

USERS = [f"u{k:02d}" for k in range(20)]
TAGS = ("vote", "paris", "macron", "europe", "nul")


def planted_case():
    """20 users; u03 improves most, u05 and u07 tie next (u05 wins on id)."""
    improvement = {u: -0.01 * k for k, u in enumerate(USERS)}
    improvement.update(u03=0.5, u05=0.3, u07=0.3)
    y = np.zeros((20, 7))
    base = np.zeros((20, 7))
    sem = np.zeros((20, 7))
    for k, u in enumerate(USERS):
        d = improvement[u] * 7
        if d >= 0:
            base[k, 0] = d
        else:
            sem[k, 0] = -d
    holders = {
        "vote": USERS,
        "paris": ["u03", "u05"],
        "macron": ["u03", "u00", "u01", "u02", "u04", "u06", "u07", "u08", "u09", "u10"],
        "europe": ["u05", "u07", "u08", "u09"],
        "nul": ["u10", "u11", "u12", "u13", "u14", "u15"],
    }
    sets = {u: {i for i, t in enumerate(TAGS) if u in holders[t]} for u in USERS}
    return score_improvement(USERS, base, sem, y), InteractionSets(TAGS, sets), holders


def test_mae_example():
    base = np.array([[0.1, 0.1, 0, 0, 0, 0, 0]])
    r = score_improvement(["u"], base, np.zeros((1, 7)), np.zeros((1, 7)))[0]
    assert round(r.baseline_mae, 5) == 0.02857 and round(r.improvement, 5) == 0.02857
    assert r.semantic_mae == 0.0


def test_identical_predictions_zero_improvement():
    rng = np.random.default_rng(0)
    p, y = rng.random((5, 7)), rng.random((5, 7))
    recs = score_improvement(list("abcde"), p, p.copy(), y)
    assert all(r.improvement == 0 for r in recs)
    for r, row, t in zip(recs, p, y):
        assert r.baseline_mae == pytest.approx(mae(row, t), abs=1e-15)


def test_misaligned():
    with pytest.raises(CohortError):
        score_improvement(["a"], np.zeros((2, 7)), np.zeros((2, 7)), np.zeros((2, 7)))


def test_planted_twenty_users():
    recs, inter, holders = planted_case()
    top, bottom = split_top_decile(recs)
    assert top == ["u03", "u05"]
    assert sorted(top + bottom) == USERS

    rows = top_decile_rates(recs, inter, TAGS, top_k=5)
    expected = {}
    for t in TAGS:
        tr = Fraction(sum(u in top for u in holders[t]), 2)
        br = Fraction(sum(u in bottom for u in holders[t]), 18)
        expected[t] = (float(br), float(tr), float(tr) - float(br))
    assert [r.hashtag for r in rows] == ["paris", "europe", "vote", "macron", "nul"]
    for r in rows:
        assert (r.bottom_rate, r.top_rate, r.delta) == expected[r.hashtag]
    paris = rows[0]
    assert (paris.top_rate, paris.bottom_rate, paris.delta) == (1.0, 0.0, 1.0)
    assert [r.hashtag for r in top_decile_rates(recs, inter, TAGS)] == [r.hashtag for r in rows]
    assert len(top_decile_rates(recs, inter, TAGS, top_k=3)) == 3


def test_table_shape():
    recs, inter, _ = planted_case()
    report = cohort_analysis(recs, inter, top_k=3)
    lines = report.table().splitlines()
    assert lines[0].split() == ["Trendy", "hashtag", "Bottom", "90%", "rate", "Top", "10%", "rate"]
    assert lines[1].split() == ["Paris", "0.000", "1.000"]
    assert lines[2].split() == ["Europe", "0.167", "0.500"]
    assert report.to_dict()["top_size"] == 2


def test_identical_sets_zero_delta():
    recs = [ImprovementRecord(f"u{k}", 0.1, 0.0, k * 0.01) for k in range(12)]
    inter = InteractionSets(("a", "b"), {r.user_id: {0} for r in recs})
    assert all(r.delta == 0 for r in top_decile_rates(recs, inter))


def test_too_few_users():
    recs = [ImprovementRecord(f"u{k}", 0, 0, 0) for k in range(9)]
    with pytest.raises(CohortError):
        top_decile_rates(recs, InteractionSets(("a",), {}))


def test_missing_interaction_set():
    recs = [ImprovementRecord(f"u{k}", 0, 0, 0) for k in range(10)]
    with pytest.raises(CohortError):
        top_decile_rates(recs, InteractionSets(("a",), {"u0": {0}}))


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.tuples(st.integers(-5, 5), st.frozensets(st.integers(0, 4))), min_size=10, max_size=60),
    st.randoms(use_true_random=False),
)
def test_cohort_properties(rows, rnd):
    recs = [ImprovementRecord(f"u{k:03d}", 0.0, 0.0, imp / 10) for k, (imp, _) in enumerate(rows)]
    inter = InteractionSets(TAGS, {f"u{k:03d}": s for k, (_, s) in enumerate(rows)})
    top, bottom = split_top_decile(recs)
    n = len(recs)
    assert len(top) == -(-n // 10) and len(top) + len(bottom) == n
    assert set(top).isdisjoint(bottom)
    result = top_decile_rates(recs, inter, top_k=5)
    shuffled = list(recs)
    rnd.shuffle(shuffled)
    assert top_decile_rates(shuffled, inter, top_k=5) == result
    for r in result:
        i = TAGS.index(r.hashtag)
        assert r.top_rate == sum(i in inter.sets[u] for u in top) / len(top)
        assert r.bottom_rate == sum(i in inter.sets[u] for u in bottom) / len(bottom)
        assert 0 <= r.bottom_rate <= 1 and 0 <= r.top_rate <= 1
        assert r.delta == r.top_rate - r.bottom_rate
