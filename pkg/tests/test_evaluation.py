import json
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from templink.evaluation import (
    auc,
    auc_bruteforce,
    compare_models,
    format_comparison,
    load_submission,
    rank_pairs,
    write_report,
)


def test_auc_examples():
    assert auc([0.9, 0.8, 0.3], [1, 0, 1]).auc == 0.5
    assert auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]).auc == 1.0
    rep = auc([0.4] * 6, [0, 1, 0, 1, 1, 0])
    assert rep.auc == 0.5 and rep.n_pos == 3 and rep.n_neg == 3
    with pytest.raises(ValueError):
        auc([0.1, 0.2], [1, 1])


def auc_oracle_suite(n_instances=100, seed=0):
    rng = np.random.default_rng(seed)
    for _ in range(n_instances):
        n = int(rng.integers(2, 201))
        y = rng.integers(0, 2, n)
        y[0], y[1] = 0, 1
        # coarse scores force plenty of ties
        s = rng.integers(0, int(rng.integers(2, 30)), n) / 7.0
        fast = auc(s, y).auc
        if fast != auc_bruteforce(s, y):
            return False
        for g in (np.exp, lambda x: 3.0 * x - 2.0):
            if auc(g(s), y).auc != fast:
                return False
    return True


def test_auc_matches_bruteforce_exactly():
    assert auc_oracle_suite()


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=80, unique=True), st.integers(0, 2**31))
def test_auc_reversal(scores, seed):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, len(scores))
    y[0], y[1] = 0, 1
    s = np.array(scores)
    assert auc(s, y).auc + auc(-s, y).auc == pytest.approx(1.0, abs=1e-12)


def test_rank_pairs():
    assert rank_pairs([0.2, 0.9, 0.5]).order.tolist() == [1, 2, 0]
    assert rank_pairs([1.0] * 5).order.tolist() == [0, 1, 2, 3, 4]
    s = np.random.default_rng(0).integers(0, 5, 100).astype(float)
    a, b = rank_pairs(s), rank_pairs(s)
    assert np.array_equal(a.order, b.order)
    bitmap = np.zeros(100, bool)
    bitmap[a.order] = True
    assert bitmap.all()
    with pytest.raises(ValueError):
        rank_pairs([0.1, np.nan])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=1, max_size=60))
def test_rank_is_stable_permutation(vals):
    sub = rank_pairs(np.array(vals, dtype=float))
    assert sorted(sub.order.tolist()) == list(range(len(vals)))
    o = sub.order
    for a, b in zip(o[:-1], o[1:]):
        assert vals[a] > vals[b] or (vals[a] == vals[b] and a < b)


def test_submission_files(tmp_path):
    sub = rank_pairs([0.2, 0.9, 0.5])
    sub.save_json(tmp_path / "s.json")
    assert load_submission(tmp_path / "s.json").tolist() == [1, 2, 0]
    sub.save_csv(tmp_path / "s.csv", [(10, 11), (12, 13), (14, 15)])
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "pair_index,u,v,score"
    assert lines[1] == "1,12,13,0.9"


def test_compare_models():
    rows = compare_models({"logistic": 0.9250, "mlp13x5": 0.92739})
    assert rows[0]["model"] == "mlp13x5" and rows[0]["best"] and not rows[1]["best"]
    assert compare_models({"only": 0.7})[0]["best"]
    tied = compare_models({"a": 0.8, "b": 0.8})
    assert all(r["best"] and r["tie"] for r in tied)
    assert "(tie)" in format_comparison(tied)


def test_report_file(tmp_path):
    write_report(tmp_path / "r.json", {"mlp": auc([0.1, 0.9], [0, 1])})
    body = json.loads((tmp_path / "r.json").read_text())
    assert body["models"]["mlp"]["auc"] == 1.0 and body["comparison"][0]["best"]


def test_auc_is_fast():
    rng = np.random.default_rng(0)
    s, y = rng.normal(size=1_000_000), rng.integers(0, 2, 1_000_000)
    t = time.perf_counter()
    auc(s, y)
    assert time.perf_counter() - t < 2.0
