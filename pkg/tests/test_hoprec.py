import itertools

import numpy as np
import pytest

from templink.edge_features import (
    EmbeddingTable,
    EmbedParams,
    MissingEmbedding,
    hoprec_score,
    hoprec_scores,
    random_walks,
    train_embeddings,
    truncate_for_embedding,
)
from templink.temporal_graph import ingest

from conftest import random_edges, view_of


def two_cliques(k=8):
    edges = list(itertools.combinations(range(k), 2))
    edges += [(a + k, b + k) for a, b in edges]
    return view_of(2 * k, edges)


def table_of(vectors, mask=None):
    vectors = np.asarray(vectors, dtype=float)
    mask = np.ones(len(vectors), bool) if mask is None else np.asarray(mask)
    return EmbeddingTable(vectors, mask)


def test_score_examples():
    tbl = table_of([[1, 0], [1, 0], [0, 1], [1, 1], [0, 0]])
    assert hoprec_score(tbl, 0, 1) == pytest.approx(1.0)
    assert hoprec_score(tbl, 0, 2) == 0.0
    assert hoprec_score(tbl, 3, 0) == pytest.approx(1 / np.sqrt(2))
    assert hoprec_score(tbl, 4, 0) == 0.0


def test_missing_vector_raises():
    tbl = table_of([[1, 0], [0, 1]], mask=[True, False])
    with pytest.raises(MissingEmbedding):
        hoprec_score(tbl, 0, 1)
    assert np.isnan(hoprec_scores(tbl, [0], [1])[0])


def test_cliques_separate():
    k = 8
    tbl = train_embeddings(two_cliques(k), EmbedParams(dim=8, epochs=10, seed=3))
    unit = tbl.unit()
    cos = unit @ unit.T
    intra = [cos[a, b] for a, b in itertools.combinations(range(k), 2)]
    intra += [cos[a + k, b + k] for a, b in itertools.combinations(range(k), 2)]
    inter = [cos[a, b + k] for a in range(k) for b in range(k)]
    assert np.mean(intra) > np.mean(inter)


def test_deterministic_single_thread():
    rng = np.random.default_rng(1)
    view = view_of(60, random_edges(rng, 60, 0.08))
    p = EmbedParams(dim=16, epochs=2, seed=11)
    a, b = train_embeddings(view, p), train_embeddings(view, p)
    assert a.vectors.tobytes() == b.vectors.tobytes()
    c = train_embeddings(view, EmbedParams(dim=16, epochs=2, seed=12))
    assert not np.array_equal(a.vectors, c.vectors)


def test_threaded_mode_stable_per_thread_count():
    rng = np.random.default_rng(2)
    view = view_of(80, random_edges(rng, 80, 0.06))
    p = EmbedParams(dim=8, epochs=2, seed=5, threads=3)
    assert np.array_equal(train_embeddings(view, p).vectors, train_embeddings(view, p).vectors)


def test_loss_decreases_with_default_params():
    rng = np.random.default_rng(4)
    view = view_of(300, random_edges(rng, 300, 0.03))
    tbl = train_embeddings(view, EmbedParams())
    assert len(tbl.loss_history) == EmbedParams().epochs
    assert tbl.loss_history[-1] <= tbl.loss_history[0]


def test_vectors_unit_and_absent_missing():
    present = np.ones(10, bool)
    view = view_of(10, [(0, 1), (1, 2), (2, 3), (3, 0), (5, 6)], present)
    tbl = train_embeddings(view, EmbedParams(dim=4, epochs=1))
    assert np.isfinite(tbl.vectors).all()
    has = np.flatnonzero(tbl.mask)
    assert set(has.tolist()) == {0, 1, 2, 3, 5, 6}
    assert np.allclose(np.linalg.norm(tbl.vectors[has], axis=1), 1.0)
    s = hoprec_scores(tbl, [0, 1, 5], [2, 0, 6])
    assert ((s >= -1) & (s <= 1)).all()
    assert np.allclose(s, hoprec_scores(tbl, [2, 0, 6], [0, 1, 5]))


def test_empty_view_raises():
    with pytest.raises(ValueError):
        train_embeddings(view_of(3, []), EmbedParams(dim=4))


def test_random_walks_follow_edges():
    view = view_of(4, [(0, 1), (1, 2), (2, 3)])
    walks = random_walks(view, np.array([0, 3, 1]), 5, np.random.default_rng(0))
    A = view.adj.toarray()
    for row in walks:
        for a, b in zip(row[:-1], row[1:]):
            assert A[a, b] == 1


def test_truncation_examples():
    # t = day / 5: edge (0,1) only at 0.2, (2,3) at 0.4 and 0.8, (4,5) at 0.6
    g = ingest([(0, 1, 1), (2, 3, 2), (4, 5, 3), (2, 3, 4)])
    rep = truncate_for_embedding(g, 0.5)
    a, b = g.dense_id(2), g.dense_id(3)
    assert b in rep.view.neighbors(a)
    assert rep.view.neighbors(g.dense_id(0)).size == 0
    assert rep.removed_edge_pct == pytest.approx(100 / 3)
    assert rep.removed_node_pct == pytest.approx(200 / 6)
    with pytest.raises(ValueError):
        truncate_for_embedding(g, 1.0)


def test_save_load_roundtrip(tmp_path):
    rng = np.random.default_rng(6)
    view = view_of(30, random_edges(rng, 30, 0.2))
    tbl = train_embeddings(view, EmbedParams(dim=6, epochs=1, seed=9))
    tbl.save(tmp_path / "e.bin")
    raw = (tmp_path / "e.bin").read_bytes()
    assert raw[:8] == b"TLEMB001"
    back = EmbeddingTable.load(tmp_path / "e.bin")
    assert back.vectors.tobytes() == tbl.vectors.tobytes()
    assert np.array_equal(back.mask, tbl.mask)
    assert back.seed == 9 and back.params_digest == tbl.params_digest
    assert back.loss_history == tbl.loss_history
