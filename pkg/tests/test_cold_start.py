import itertools
import json
from types import SimpleNamespace

import numpy as np
import pytest

from templink.cold_start import (
    NewbornSet,
    build_defaults,
    impute_edge_unseen_seen,
    impute_edge_unseen_unseen,
    impute_node_features,
    mean_pair_cosine,
    newborn_set,
)
from templink.edge_features import EmbeddingTable, hoprec_score

from conftest import random_edges, view_of
from test_dice import node_set_oracle, nbr_sets, set_set_oracle


def births(*b):
    return SimpleNamespace(birth=np.array(b, dtype=float))


def test_newborn_membership():
    nb = newborn_set(births(0.05, 0.85, 0.89), 0.9, 0.1)
    assert nb.members.tolist() == [1, 2]
    nb = newborn_set(births(0.8, 0.85, 0.95), 0.9, 0.1)
    assert nb.members.tolist() == [1]      # 0.8 is on the excluded boundary, 0.95 is unseen
    with pytest.raises(ValueError):
        newborn_set(births(0.1, 0.2), 0.9, 0.1)
    with pytest.raises(ValueError):
        newborn_set(births(0.1, 0.2), 0.1, 0.1)


def test_node_mean():
    x, y = np.arange(31.0), np.arange(31.0) ** 2
    feats = np.vstack([x, y, np.full(31, 7.0)])
    assert np.array_equal(impute_node_features(NewbornSet(0.9, np.array([0, 1])), feats), (x + y) / 2)
    assert np.array_equal(impute_node_features(NewbornSet(0.9, np.array([2])), feats), feats[2])
    rng = np.random.default_rng(0)
    F = rng.normal(size=(5, 31))
    got = impute_node_features(NewbornSet(0.9, np.arange(5)), F)
    naive = [sum(F[i, j] for i in range(5)) / 5 for j in range(31)]
    assert np.abs(got - naive).max() < 1e-12
    assert ((got >= F.min(0)) & (got <= F.max(0))).all()


def random_instance(seed, n=15, n_newborn=4, dim=5):
    rng = np.random.default_rng(seed)
    view = view_of(n, random_edges(rng, n, 0.3))
    feats = rng.normal(size=(n, 31))
    vecs = rng.normal(size=(n, dim))
    mask = np.ones(n, bool)
    table = EmbeddingTable(vecs / np.linalg.norm(vecs, axis=1, keepdims=True), mask)
    members = np.sort(rng.choice(n, n_newborn, replace=False))
    return view, feats, table, NewbornSet(0.9, members)


@pytest.mark.parametrize("seed", range(10))
def test_defaults_match_oracles(seed):
    view, feats, table, nb = random_instance(seed)
    seen = np.ones(view.n_nodes, bool)
    d = build_defaults(feats, view, table, nb, seen)
    N = nbr_sets(view)
    num, den = set_set_oracle(N, nb.members.tolist())
    assert d.dice_uu == (num / den if den else 0.0)
    for v in range(view.n_nodes):
        num, den = node_set_oracle(N, v, nb.members.tolist())
        assert impute_edge_unseen_seen(d, v).dice == (num / den if den else 0.0)
        others = [u for u in nb.members if u != v]
        expect = np.mean([hoprec_score(table, u, v) for u in others])
        assert d.hoprec_us[v] == pytest.approx(expect, abs=1e-12)
    pairs = [hoprec_score(table, a, b) for a, b in itertools.permutations(nb.members, 2)]
    assert d.hoprec_uu == pytest.approx(np.mean(pairs), abs=1e-12)
    assert impute_edge_unseen_unseen(d) == (d.hoprec_uu, d.dice_uu)
    assert np.array_equal(d.node_mean, feats[nb.members].mean(0))


def test_singleton_collapses_to_pair():
    view, feats, table, _ = random_instance(42)
    nb = NewbornSet(0.9, np.array([3]))
    d = build_defaults(feats, view, table, nb, np.ones(view.n_nodes, bool))
    from templink.edge_features import dice
    for v in (0, 5, 9):
        pair = impute_edge_unseen_seen(d, v)
        assert pair.hoprec == pytest.approx(hoprec_score(table, 3, v), abs=1e-12)
        assert pair.dice == dice(view, 3, v)


def test_isolated_edge_and_identical_embeddings():
    view = view_of(5, [(0, 1), (2, 3)])
    table = EmbeddingTable(np.tile([[0.6, 0.8]], (5, 1)), np.ones(5, bool))
    nb = NewbornSet(0.9, np.array([0, 1]))
    d = build_defaults(np.zeros((5, 31)), view, table, nb, np.ones(5, bool))
    assert d.dice_uu == 0.0
    assert d.hoprec_uu == pytest.approx(1.0)
    assert impute_edge_unseen_seen(d, 4).dice == 0.0      # isolated v


def test_unseen_target_rejected_and_json():
    view, feats, table, nb = random_instance(1)
    seen = np.ones(view.n_nodes, bool)
    seen[0] = False
    d = build_defaults(feats, view, table, nb, seen)
    with pytest.raises(ValueError):
        impute_edge_unseen_seen(d, 0, seen)
    body = json.loads(d.to_json())
    assert len(body["node_mean"]) == 31 and body["population"] == "newborn"


def test_seen_population_switch():
    view, feats, table, nb = random_instance(2)
    seen = np.zeros(view.n_nodes, bool)
    seen[:10] = True
    d = build_defaults(feats, view, table, nb, seen, population="seen")
    assert np.allclose(d.node_mean, feats[:10].mean(0))
    assert d.population_size == 10
    with pytest.raises(ValueError):
        build_defaults(feats, view, table, nb, seen, population="everyone")


def test_missing_embeddings_are_skipped():
    view, feats, table, nb = random_instance(3)
    table.mask[nb.members[0]] = False
    d = build_defaults(feats, view, table, nb, np.ones(view.n_nodes, bool))
    rest = nb.members[1:]
    pairs = [hoprec_score(table, a, b) for a, b in itertools.permutations(rest, 2)]
    assert d.hoprec_uu == pytest.approx(np.mean(pairs), abs=1e-12)
    assert np.isnan(d.hoprec_us[nb.members[0]])
    # falls back to the unseen-unseen value
    assert impute_edge_unseen_seen(d, int(nb.members[0])).hoprec == d.hoprec_uu


def test_mean_pair_cosine_small_cases():
    assert mean_pair_cosine(np.array([[1.0, 0.0]])) == 0.0
    u = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    assert mean_pair_cosine(u) == 0.0
