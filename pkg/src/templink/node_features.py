"""Per-node feature vectors with forward/backward discrete time derivatives.

Layout of the 31 columns::

    birth_time,
    6 base features at t0,
    for each base feature: fwd1, bwd1, fwd2, bwd2

Base features, in order: log paper count, clustering coefficient, log degree,
log PageRank, log in-degree, log out-degree.
"""
from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .temporal_graph import GraphView, TemporalGraph, paper_counts, snapshot

log = logging.getLogger(__name__)

BASE_NAMES = (
    "log_paper_count",
    "clustering",
    "log_degree",
    "log_pagerank",
    "log_in_degree",
    "log_out_degree",
)
DERIV_NAMES = ("fwd1", "bwd1", "fwd2", "bwd2")
WINDOW_TAGS = ("now", "fwd1", "fwd2", "bwd1", "bwd2")
FEATURE_NAMES = (
    ("birth_time",)
    + BASE_NAMES
    + tuple(f"{b}_{d}" for b in BASE_NAMES for d in DERIV_NAMES)
)
N_FEATURES = len(FEATURE_NAMES)  # 31
PAGERANK_FLOOR = 1e-12


class PageRankResult(NamedTuple):
    scores: np.ndarray
    converged: bool
    n_iter: int


def pagerank(view: GraphView, damping: float = 0.85, tol: float = 1e-10,
             max_iter: int = 200) -> PageRankResult:
    """PageRank of the undirected graph by power iteration.

    Only nodes present in the view take part; absent nodes score 0. Nodes
    without neighbours spread their mass uniformly over all present nodes.
    Iteration stops once the L1 change drops below ``tol``.
    """
    present = np.flatnonzero(view.present)
    n = present.size
    if n == 0:
        raise ValueError("empty view")
    adj = view.undirected().adj[present][:, present].astype(np.float64)
    deg = np.asarray(adj.sum(axis=1)).ravel()
    dangling = deg == 0
    inv_deg = np.where(dangling, 0.0, 1.0 / np.where(dangling, 1.0, deg))
    walk = sp.csr_matrix(adj.T)

    x = np.full(n, 1.0 / n)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        spread = walk @ (x * inv_deg)
        x_new = damping * (spread + x[dangling].sum() / n) + (1.0 - damping) / n
        x_new /= x_new.sum()
        err = np.abs(x_new - x).sum()
        x = x_new
        if err < tol:
            converged = True
            break
    if not converged:
        log.warning("pagerank did not converge in %d iterations", max_iter)
    scores = np.zeros(view.n_nodes)
    scores[present] = x
    return PageRankResult(scores, converged, it)


def triangle_counts(view: GraphView, chunk: int = 4096) -> np.ndarray:
    """Number of edges among the neighbours of every node."""
    adj = view.undirected().adj.astype(np.int64)
    out = np.zeros(adj.shape[0], dtype=np.int64)
    for lo in range(0, adj.shape[0], chunk):
        block = adj[lo:lo + chunk]
        paths = block @ adj
        out[lo:lo + chunk] = np.asarray(paths.multiply(block).sum(axis=1)).ravel()
    return out // 2


def clustering_coefficients(view: GraphView) -> np.ndarray:
    und = view.undirected()
    deg = und.degree().astype(np.float64)
    tri = triangle_counts(und).astype(np.float64)
    denom = deg * (deg - 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        cc = np.where(deg >= 2, 2.0 * tri / np.where(denom > 0, denom, 1.0), 0.0)
    return cc


def clustering_coefficient(view: GraphView, u: int) -> float:
    """Local clustering coefficient of ``u``; 0 when ``deg(u) < 2``."""
    adj = view.undirected().adj
    nbrs = adj.indices[adj.indptr[u]:adj.indptr[u + 1]]
    k = nbrs.size
    if k < 2:
        return 0.0
    links = adj[nbrs][:, nbrs].nnz // 2
    return 2.0 * links / (k * (k - 1))


def time_derivatives(now, back1, back2, clip1, clip2):
    """Forward and backward first/second differences.

    ``back*`` are the feature on [0, t0 - k dt], ``clip*`` on [k dt, t0].
    Returns ``(fwd1, bwd1, fwd2, bwd2)``.
    """
    fwd1 = now - back1
    bwd1 = now - clip1
    fwd2 = now - 2 * back1 + back2
    bwd2 = now - 2 * clip1 + clip2
    return fwd1, bwd1, fwd2, bwd2


@dataclass(frozen=True, eq=False)
class FeatureContext:
    """The five undirected windows used for derivatives, plus directed twins."""

    graph: TemporalGraph
    t0: float
    dt: float
    views: dict
    directed: dict


def window_bounds(t0: float, dt: float) -> dict:
    return {
        "now": (0.0, t0),
        "fwd1": (0.0, t0 - dt),
        "fwd2": (0.0, t0 - 2 * dt),
        "bwd1": (dt, t0),
        "bwd2": (2 * dt, t0),
    }


def build_context(g: TemporalGraph, t0: float, dt: float) -> FeatureContext:
    if not t0 - 2 * dt > 0:
        raise ValueError("need t0 - 2*dt > 0")
    if not t0 <= 1.0:
        raise ValueError("t0 must be at most 1")
    views, directed = {}, {}
    for tag, (ta, tb) in window_bounds(t0, dt).items():
        views[tag] = snapshot(g, ta, tb)
        directed[tag] = snapshot(g, ta, tb, directed=True)
    return FeatureContext(g, t0, dt, views, directed)


def window_base_features(ctx: FeatureContext, tag: str, *, damping: float = 0.85,
                         tol: float = 1e-10, max_iter: int = 200) -> np.ndarray:
    """``(n_nodes, 6)`` base features of every node on one window.

    Nodes absent from the window get zeros, except log PageRank which takes
    ``log(PAGERANK_FLOOR)``.
    """
    ta, tb = window_bounds(ctx.t0, ctx.dt)[tag]
    view = ctx.views[tag]
    dview = ctx.directed[tag]
    counts = paper_counts(ctx.graph, tb, t_a=ta)
    pr = pagerank(view, damping, tol, max_iter).scores
    out = np.empty((ctx.graph.n_nodes, 6))
    out[:, 0] = np.log1p(counts)
    out[:, 1] = clustering_coefficients(view)
    out[:, 2] = np.log1p(view.degree())
    out[:, 3] = np.log(np.maximum(pr, PAGERANK_FLOOR))
    out[:, 4] = np.log1p(dview.in_degree())
    out[:, 5] = np.log1p(dview.out_degree())
    out[~view.present] = [0.0, 0.0, 0.0, np.log(PAGERANK_FLOOR), 0.0, 0.0]
    return out


def base_features(ctx: FeatureContext, view_tag: str, u: int) -> np.ndarray:
    return window_base_features(ctx, view_tag)[u]


def assemble(birth: np.ndarray, base: dict) -> np.ndarray:
    """Stack birth time, base features and their derivatives into 31 columns."""
    derivs = time_derivatives(base["now"], base["fwd1"], base["fwd2"], base["bwd1"], base["bwd2"])
    n = birth.shape[0]
    out = np.empty((n, N_FEATURES))
    out[:, 0] = birth
    out[:, 1:7] = base["now"]
    # interleave so each base feature's four derivatives are contiguous
    stacked = np.stack(derivs, axis=2)  # (n, 6, 4)
    out[:, 7:] = stacked.reshape(n, 24)
    return out


def compute_node_features(g: TemporalGraph, t0: float, dt: float, *, threads: int = 1,
                          ctx: FeatureContext | None = None) -> "NodeFeatureTable":
    """Feature matrix for every node; rows of unseen nodes (birth > t0) are NaN."""
    if ctx is None:
        ctx = build_context(g, t0, dt)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            base = dict(zip(WINDOW_TAGS, pool.map(lambda k: window_base_features(ctx, k), WINDOW_TAGS)))
    else:
        base = {k: window_base_features(ctx, k) for k in WINDOW_TAGS}
    mat = assemble(g.birth, base)
    seen = g.seen(t0)
    mat[~seen] = np.nan
    return NodeFeatureTable(mat, seen, t0, dt)


def node_feature_vector(ctx: FeatureContext, u: int) -> np.ndarray:
    base = {k: window_base_features(ctx, k)[u:u + 1] for k in WINDOW_TAGS}
    return assemble(ctx.graph.birth[u:u + 1], base)[0]


@dataclass(frozen=True, eq=False)
class NodeFeatureTable:
    matrix: np.ndarray
    seen: np.ndarray
    t0: float
    dt: float

    def save(self, path) -> None:
        """Write ``<path>`` (little-endian float64, row-major) and ``<path>.json``."""
        path = Path(path)
        self.matrix.astype("<f8").tofile(path)
        meta = {
            "columns": list(FEATURE_NAMES),
            "n_rows": int(self.matrix.shape[0]),
            "t0": self.t0,
            "dt": self.dt,
            "seen": np.flatnonzero(self.seen).tolist(),
        }
        Path(str(path) + ".json").write_text(json.dumps(meta))

    @classmethod
    def load(cls, path) -> "NodeFeatureTable":
        path = Path(path)
        meta = json.loads(Path(str(path) + ".json").read_text())
        mat = np.fromfile(path, dtype="<f8").reshape(meta["n_rows"], len(meta["columns"]))
        seen = np.zeros(meta["n_rows"], dtype=bool)
        seen[meta["seen"]] = True
        return cls(mat.astype(np.float64), seen, meta["t0"], meta["dt"])
