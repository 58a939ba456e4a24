"""Random-walk ranking embeddings (HOP-rec style) and their cosine score.

Training samples short uniform random walks. A node reached after ``k`` hops
is a positive for the walk's start with weight ``1/k``; negatives are drawn
uniformly from the graph. Each (start, positive, negative) triple contributes

    w_k * softplus(-gamma * (e_s . e_p - e_s . e_n))

and triples whose score gap already exceeds ``margin`` are skipped. Vectors
are kept on the unit sphere after every step, so the dot product is the
cosine score.
"""
from __future__ import annotations

import hashlib
import json
import logging
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from ..temporal_graph import GraphView, TemporalGraph, snapshot

log = logging.getLogger(__name__)

MAGIC = b"TLEMB001"


class MissingEmbedding(KeyError):
    """Raised when a node has no vector (absent from the training graph)."""


@dataclass
class EmbedParams:
    dim: int = 128
    max_hop: int = 3
    walks_per_node: int = 10
    negatives: int = 5
    margin: float = 1.0
    gamma: float = 4.0
    lr: float = 0.05
    lr_min: float = 0.001
    epochs: int = 5
    batch_size: int = 512
    seed: int = 0
    threads: int = 1

    def digest(self) -> bytes:
        payload = {k: v for k, v in asdict(self).items() if k != "threads"}
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).digest()


@dataclass(eq=False)
class EmbeddingTable:
    """Per-node vectors; ``mask[u]`` is False for nodes with no vector."""

    vectors: np.ndarray
    mask: np.ndarray
    seed: int = 0
    params_digest: bytes = b"\0" * 32
    trained_on: tuple = (0.0, 1.0)
    loss_history: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.vectors.shape[0]

    def has(self, u) -> np.ndarray:
        return self.mask[u]

    def unit(self) -> np.ndarray:
        """Row-normalised vectors (zero rows stay zero)."""
        norms = np.linalg.norm(self.vectors, axis=1, keepdims=True)
        return np.divide(self.vectors, norms, out=np.zeros_like(self.vectors), where=norms > 0)

    def save(self, path) -> None:
        """Binary layout: magic, n, dim, seed, 32-byte params digest, presence
        mask (n bytes), then row-major little-endian float64 vectors."""
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<qqq", self.n_nodes, self.dim, self.seed))
            fh.write(self.params_digest.ljust(32, b"\0")[:32])
            fh.write(self.mask.astype(np.uint8).tobytes())
            fh.write(self.vectors.astype("<f8").tobytes())
        meta = {"trained_on": list(self.trained_on), "loss_history": self.loss_history}
        Path(str(path) + ".json").write_text(json.dumps(meta))

    @classmethod
    def load(cls, path) -> "EmbeddingTable":
        data = Path(path).read_bytes()
        if data[:8] != MAGIC:
            raise ValueError(f"{path}: not an embedding file")
        n, dim, seed = struct.unpack("<qqq", data[8:32])
        digest = data[32:64]
        mask = np.frombuffer(data[64:64 + n], dtype=np.uint8).astype(bool)
        vecs = np.frombuffer(data[64 + n:], dtype="<f8").reshape(n, dim).astype(np.float64)
        meta_path = Path(str(path) + ".json")
        trained_on, hist = (0.0, 1.0), []
        if meta_path.exists():
            meta = json.loads(meta_path.read_text())
            trained_on, hist = tuple(meta["trained_on"]), meta["loss_history"]
        return cls(vecs, mask, int(seed), digest, trained_on, hist)


@dataclass(frozen=True)
class TruncationReport:
    view: GraphView
    removed_edge_pct: float
    removed_node_pct: float


def truncate_for_embedding(g: TemporalGraph, t_cut: float, t_end: float = 1.0) -> TruncationReport:
    """Drop edges whose every record precedes ``t_cut``.

    Edges that re-appear at or after ``t_cut`` survive. Percentages are taken
    relative to the graph on ``[0, t_end]``.
    """
    if not 0.0 < t_cut < 1.0:
        raise ValueError("t_cut must lie in (0, 1)")
    full = snapshot(g, 0.0, t_end)
    view = snapshot(g, t_cut, t_end)
    n_full = full.edge_count()
    nodes_full = int((full.degree() > 0).sum())
    rm_e = 100.0 * (n_full - view.edge_count()) / max(n_full, 1)
    rm_n = 100.0 * (nodes_full - int(view.present.sum())) / max(nodes_full, 1)
    return TruncationReport(view, rm_e, rm_n)


def random_walks(view: GraphView, starts: np.ndarray, length: int,
                 rng: np.random.Generator) -> np.ndarray:
    """Uniform random walks; row i is ``[starts[i], x1, ..., x_length]``."""
    indptr, indices = view.adj.indptr, view.adj.indices
    deg = np.diff(indptr)
    walks = np.empty((starts.size, length + 1), dtype=np.int64)
    walks[:, 0] = starts
    cur = starts
    for step in range(1, length + 1):
        d = deg[cur]
        r = rng.random(cur.size)
        nxt = indices[indptr[cur] + np.minimum((r * d).astype(np.int64), np.maximum(d - 1, 0))]
        cur = np.where(d > 0, nxt, cur)
        walks[:, step] = cur
    return walks


def _positives(view: GraphView, nodes: np.ndarray, params: EmbedParams,
               rng: np.random.Generator):
    starts = np.repeat(nodes, params.walks_per_node)
    walks = random_walks(view, starts, params.max_hop, rng)
    src = np.repeat(walks[:, 0], params.max_hop)
    dst = walks[:, 1:].ravel()
    hop = np.tile(np.arange(1, params.max_hop + 1), starts.size)
    keep = src != dst
    return src[keep], dst[keep], 1.0 / hop[keep]


def _sample_positives(view, nodes, params, rng, epoch_seed):
    if params.threads <= 1:
        return _positives(view, nodes, params, rng)
    # per-block RNG streams: stable for a fixed thread count
    blocks = np.array_split(nodes, params.threads)
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(epoch_seed).spawn(params.threads)]
    with ThreadPoolExecutor(params.threads) as pool:
        parts = list(pool.map(lambda a: _positives(view, a[0], params, a[1]), zip(blocks, streams)))
    return tuple(np.concatenate(p) for p in zip(*parts))


def _normalize_rows(mat: np.ndarray, rows: np.ndarray | None = None) -> None:
    sub = mat if rows is None else mat[rows]
    norms = np.linalg.norm(sub, axis=1, keepdims=True)
    sub = sub / np.maximum(norms, 1e-12)
    if rows is None:
        mat[:] = sub
    else:
        mat[rows] = sub


def train_embeddings(view: GraphView, params: EmbedParams | None = None) -> EmbeddingTable:
    """Fit unit-norm node vectors on ``view`` with the hop-weighted ranking loss.

    Single-threaded runs are bit-reproducible for a given seed. With
    ``params.threads > 1`` walk sampling is split into per-thread RNG streams.
    """
    params = params or EmbedParams()
    view = view.undirected()
    nodes = np.flatnonzero(view.present & (view.degree() > 0))
    if nodes.size < 2:
        raise ValueError("cannot train embeddings on an empty graph")
    rng = np.random.default_rng(params.seed)
    n = view.n_nodes
    emb = np.zeros((n, params.dim))
    emb[nodes] = rng.standard_normal((nodes.size, params.dim))
    _normalize_rows(emb, nodes)

    history = []
    total_steps = None
    step = 0
    for epoch in range(params.epochs):
        src, pos, weight = _sample_positives(view, nodes, params, rng, params.seed + 1000 * (epoch + 1))
        m = params.negatives
        src = np.repeat(src, m)
        pos = np.repeat(pos, m)
        weight = np.repeat(weight, m)
        neg = nodes[rng.integers(0, nodes.size, src.size)]
        order = rng.permutation(src.size)
        src, pos, neg, weight = src[order], pos[order], neg[order], weight[order]
        if total_steps is None:
            total_steps = params.epochs * int(np.ceil(src.size / params.batch_size))

        loss_sum = 0.0
        for lo in range(0, src.size, params.batch_size):
            s = src[lo:lo + params.batch_size]
            p = pos[lo:lo + params.batch_size]
            q = neg[lo:lo + params.batch_size]
            w = weight[lo:lo + params.batch_size]
            es, ep, eq = emb[s], emb[p], emb[q]
            gap = np.einsum("ij,ij->i", es, ep) - np.einsum("ij,ij->i", es, eq)
            z = -params.gamma * gap
            loss_sum += float(np.dot(w, np.logaddexp(0.0, z)))

            frac = min(step / max(total_steps, 1), 1.0)
            lr = params.lr + (params.lr_min - params.lr) * frac
            step += 1
            active = gap < params.margin
            if not active.any():
                continue
            # d loss / d gap, zero outside the margin
            coef = np.where(active, -w * params.gamma / (1.0 + np.exp(-z)), 0.0)[:, None]
            touched, inv = np.unique(np.concatenate([s, p, q]), return_inverse=True)
            scatter = sp.csr_matrix((np.ones(inv.size), (inv, np.arange(inv.size))),
                                    shape=(touched.size, inv.size))
            grad = scatter @ np.concatenate([coef * (ep - eq), coef * es, -coef * es])
            emb[touched] -= lr * grad
            _normalize_rows(emb, touched)
        history.append(loss_sum / src.size)
        log.info("embedding epoch %d loss %.6f", epoch + 1, history[-1])

    mask = np.zeros(n, dtype=bool)
    mask[nodes] = True
    return EmbeddingTable(emb, mask, params.seed, params.digest(),
                          (view.t_a, view.t_b), history)


def hoprec_score(tbl: EmbeddingTable, u: int, v: int) -> float:
    """Cosine similarity of two node vectors; 0 if either is the zero vector."""
    for x in (u, v):
        if not tbl.mask[x]:
            raise MissingEmbedding(x)
    a, b = tbl.vectors[u], tbl.vectors[v]
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def hoprec_scores(tbl: EmbeddingTable, us, vs) -> np.ndarray:
    """Vectorised cosine score; entries with a missing vector are NaN."""
    us = np.asarray(us, dtype=np.int64)
    vs = np.asarray(vs, dtype=np.int64)
    unit = tbl.unit()
    out = np.clip(np.einsum("ij,ij->i", unit[us], unit[vs]), -1.0, 1.0)
    out[~(tbl.mask[us] & tbl.mask[vs])] = np.nan
    return out
