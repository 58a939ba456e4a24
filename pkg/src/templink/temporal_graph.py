"""Timestamped edge records, the quantile time transform and windowed graph views.

Raw input is a list of ``(u, v, day)`` tuples. After :func:`ingest`, every record
carries a time ``t`` in the open unit interval, node ids are dense, and the
per-node and per-edge time lists are stored as CSR-style ``(ptr, values)`` arrays
so that window queries are plain vectorised masks.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

log = logging.getLogger(__name__)

__all__ = [
    "TemporalRecord",
    "TemporalGraph",
    "GraphView",
    "ingest",
    "quantile_times",
    "snapshot",
    "paper_count",
    "read_records",
]


@dataclass(frozen=True)
class TemporalRecord:
    u: int
    v: int
    day: int


def quantile_times(days: np.ndarray) -> np.ndarray:
    """Empirical-CDF transform of record days.

    ``t(d) = #{records with day' <= d} / (N + 1)``, counted with multiplicity, so
    equal days share a value and every value lies strictly inside (0, 1).
    """
    days = np.asarray(days)
    n = days.size
    order = np.sort(days, kind="stable")
    counts = np.searchsorted(order, days, side="right")
    return counts / (n + 1.0)


def _group(keys: np.ndarray, vals: np.ndarray, n_groups: int):
    """Sort ``vals`` within ``keys`` and return CSR (ptr, sorted values)."""
    order = np.lexsort((vals, keys))
    ptr = np.zeros(n_groups + 1, dtype=np.int64)
    np.cumsum(np.bincount(keys, minlength=n_groups), out=ptr[1:])
    return ptr, vals[order]


@dataclass(frozen=True, eq=False)
class TemporalGraph:
    """Immutable multigraph of timestamped records.

    Attributes
    ----------
    n_nodes : int
        Number of dense node ids.
    src, dst, t : ndarray
        One entry per record, sorted by ``(t, src, dst)``; ``src < dst``.
    edge_u, edge_v : ndarray
        Canonical unordered edges (``edge_u < edge_v``), lexicographically sorted.
    record_edge : ndarray
        Index into the canonical edge arrays for every record.
    node_ids : ndarray
        Original id of every dense node (the inverse remap table).
    """

    n_nodes: int
    src: np.ndarray
    dst: np.ndarray
    t: np.ndarray
    days: np.ndarray
    edge_u: np.ndarray
    edge_v: np.ndarray
    record_edge: np.ndarray
    node_ids: np.ndarray
    node_time_ptr: np.ndarray
    node_time_val: np.ndarray
    edge_time_ptr: np.ndarray
    edge_time_val: np.ndarray
    birth: np.ndarray
    n_rejected: int = 0
    _id_lookup: dict = field(default=None, repr=False)

    # -- attribute accessors -------------------------------------------------
    @property
    def n_records(self) -> int:
        return int(self.t.size)

    @property
    def n_edges(self) -> int:
        return int(self.edge_u.size)

    def node_times(self, u: int) -> np.ndarray:
        return self.node_time_val[self.node_time_ptr[u]:self.node_time_ptr[u + 1]]

    def edge_index(self, u: int, v: int) -> int:
        """Canonical edge index of ``{u, v}``, or -1 when the pair never occurs."""
        a, b = (u, v) if u < v else (v, u)
        lo = np.searchsorted(self.edge_u, a, side="left")
        hi = np.searchsorted(self.edge_u, a, side="right")
        j = lo + np.searchsorted(self.edge_v[lo:hi], b)
        if j < hi and self.edge_v[j] == b:
            return int(j)
        return -1

    def edge_times(self, u: int, v: int) -> np.ndarray:
        e = self.edge_index(u, v)
        if e < 0:
            return np.empty(0)
        return self.edge_time_val[self.edge_time_ptr[e]:self.edge_time_ptr[e + 1]]

    def edge_first_time(self) -> np.ndarray:
        return self.edge_time_val[self.edge_time_ptr[:-1]]

    def edge_last_time(self) -> np.ndarray:
        return self.edge_time_val[self.edge_time_ptr[1:] - 1]

    def edge_keys(self) -> np.ndarray:
        """``u * n + v`` keys of all canonical edges (sorted ascending)."""
        return self.edge_u.astype(np.int64) * self.n_nodes + self.edge_v

    def seen(self, t0: float) -> np.ndarray:
        """Boolean mask of nodes in V_{t0} (born at or before ``t0``)."""
        return self.birth <= t0

    def dense_id(self, original) -> int:
        """Dense index of an original node id, -1 when the id never occurs."""
        lookup = self._id_lookup
        if lookup is None:
            lookup = {int(x): i for i, x in enumerate(self.node_ids)}
            object.__setattr__(self, "_id_lookup", lookup)
        return lookup.get(int(original), -1)

    def dense_ids(self, originals: Iterable) -> np.ndarray:
        return np.array([self.dense_id(x) for x in originals], dtype=np.int64)

    # -- persistence ---------------------------------------------------------
    def save(self, path) -> None:
        np.savez(
            path,
            u=self.node_ids[self.src],
            v=self.node_ids[self.dst],
            day=self.days,
            n_rejected=np.array(self.n_rejected),
        )

    @classmethod
    def load(cls, path) -> "TemporalGraph":
        with np.load(path) as z:
            g = ingest(zip(z["u"].tolist(), z["v"].tolist(), z["day"].tolist()))
            rejected = int(z["n_rejected"])
        object.__setattr__(g, "n_rejected", rejected)
        return g


def ingest(record_stream: Iterable) -> TemporalGraph:
    """Build a :class:`TemporalGraph` from ``(u, v, day)`` records.

    Records may be :class:`TemporalRecord` instances or plain triples.
    Self-loops are dropped and counted in ``n_rejected``.

    Raises
    ------
    ValueError
        If no usable record remains or a day is negative.
    """
    rows = []
    for rec in record_stream:
        if isinstance(rec, TemporalRecord):
            rows.append((rec.u, rec.v, rec.day))
        else:
            u, v, d = rec
            rows.append((int(u), int(v), int(d)))
    if not rows:
        raise ValueError("no records")
    arr = np.asarray(rows, dtype=np.int64)
    loops = arr[:, 0] == arr[:, 1]
    n_rejected = int(loops.sum())
    if n_rejected:
        log.warning("rejected %d self-loop records", n_rejected)
        arr = arr[~loops]
    if arr.shape[0] == 0:
        raise ValueError("no records")
    if (arr[:, 2] < 0).any():
        raise ValueError("negative day index")
    if (arr[:, :2] < 0).any():
        raise ValueError("node ids must be non-negative")

    node_ids, inv = np.unique(arr[:, :2], return_inverse=True)
    inv = inv.reshape(-1, 2)
    a = np.minimum(inv[:, 0], inv[:, 1])
    b = np.maximum(inv[:, 0], inv[:, 1])
    days = arr[:, 2]
    t = quantile_times(days)

    order = np.lexsort((b, a, t))
    a, b, t, days = a[order], b[order], t[order], days[order]
    n = node_ids.size

    keys = a * n + b
    ukeys, rec_edge = np.unique(keys, return_inverse=True)
    rec_edge = rec_edge.ravel()
    edge_u, edge_v = ukeys // n, ukeys % n
    edge_ptr, edge_val = _group(rec_edge, t, ukeys.size)

    nodes = np.concatenate([a, b])
    ntimes = np.concatenate([t, t])
    node_ptr, node_val = _group(nodes, ntimes, n)
    birth = node_val[node_ptr[:-1]]

    return TemporalGraph(
        n_nodes=int(n),
        src=a, dst=b, t=t, days=days,
        edge_u=edge_u, edge_v=edge_v, record_edge=rec_edge,
        node_ids=node_ids,
        node_time_ptr=node_ptr, node_time_val=node_val,
        edge_time_ptr=edge_ptr, edge_time_val=edge_val,
        birth=birth, n_rejected=n_rejected,
    )


def read_records(path) -> list[tuple[int, int, int]]:
    """Read records from a text file (``u v day`` per line) or a JSON triple array.

    Separators may be commas, tabs or spaces; lines starting with ``#`` are
    comments.
    """
    path = Path(path)
    text = path.read_text()
    stripped = text.lstrip()
    if stripped.startswith("["):
        data = json.loads(stripped)
        return [(int(u), int(v), int(d)) for u, v, d in data]
    out = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.replace(",", " ").replace("\t", " ").split()
        if len(parts) != 3:
            raise ValueError(f"malformed record line: {line!r}")
        out.append((int(parts[0]), int(parts[1]), int(float(parts[2]))))
    return out


@dataclass(frozen=True, eq=False)
class GraphView:
    """Immutable snapshot of the graph over the closed window ``[t_a, t_b]``.

    ``adj`` is an ``n_nodes x n_nodes`` CSR 0/1 matrix over global dense ids.
    For a directed view ``adj[u, v] = 1`` means u -> v (u born first).
    """

    t_a: float
    t_b: float
    directed: bool
    adj: sp.csr_matrix
    present: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.adj.shape[0]

    def neighbors(self, u: int) -> np.ndarray:
        return self.adj.indices[self.adj.indptr[u]:self.adj.indptr[u + 1]]

    def degree(self) -> np.ndarray:
        """Undirected degree (out-degree for a directed view)."""
        return np.diff(self.adj.indptr)

    def in_degree(self) -> np.ndarray:
        return np.bincount(self.adj.indices, minlength=self.n_nodes)

    def out_degree(self) -> np.ndarray:
        return np.diff(self.adj.indptr)

    def edge_count(self) -> int:
        nnz = self.adj.nnz
        return nnz if self.directed else nnz // 2

    def undirected(self) -> "GraphView":
        if not self.directed:
            return self
        sym = (self.adj + self.adj.T).tocsr()
        sym.sort_indices()
        return GraphView(self.t_a, self.t_b, False, sym, self.present)


def _edge_mask(g: TemporalGraph, t_a: float, t_b: float) -> np.ndarray:
    in_win = (g.t >= t_a) & (g.t <= t_b)
    mask = np.zeros(g.n_edges, dtype=bool)
    mask[g.record_edge[in_win]] = True
    return mask


def view_from_edges(n: int, eu: np.ndarray, ev: np.ndarray, present: np.ndarray,
                    t_a: float = 0.0, t_b: float = 1.0, directed: bool = False) -> GraphView:
    """Assemble a view from an explicit edge list (each pair listed once)."""
    eu = np.asarray(eu, dtype=np.int64)
    ev = np.asarray(ev, dtype=np.int64)
    if directed:
        rows, cols = eu, ev
    else:
        rows, cols = np.concatenate([eu, ev]), np.concatenate([ev, eu])
    data = np.ones(rows.size, dtype=np.int64)
    adj = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
    adj.sum_duplicates()
    adj.data[:] = 1
    adj.sort_indices()
    return GraphView(t_a, t_b, directed, adj, np.asarray(present, dtype=bool))


def snapshot(g: TemporalGraph, t_a: float, t_b: float, directed: bool = False) -> GraphView:
    """Graph formed by edges with at least one record time in ``[t_a, t_b]``.

    The directed view orients every edge from the earlier-born endpoint to the
    later-born one; equal births are oriented from the smaller id.
    """
    if not (0.0 <= t_a < t_b <= 1.0):
        raise ValueError(f"invalid interval [{t_a}, {t_b}]")
    mask = _edge_mask(g, t_a, t_b)
    eu, ev = g.edge_u[mask], g.edge_v[mask]
    if t_a <= 0.0:
        present = g.birth <= t_b
    else:
        present = np.zeros(g.n_nodes, dtype=bool)
        present[eu] = True
        present[ev] = True
    if directed:
        # eu < ev already, so ties on birth keep eu -> ev
        flip = g.birth[ev] < g.birth[eu]
        eu, ev = np.where(flip, ev, eu), np.where(flip, eu, ev)
    return view_from_edges(g.n_nodes, eu, ev, present, t_a, t_b, directed)


def paper_count(g: TemporalGraph, u: int, t0: float, t_a: float = 0.0) -> int:
    """Distinct record times ``s`` of node ``u`` with ``t_a <= s < t0``."""
    times = g.node_times(u)
    times = times[(times >= t_a) & (times < t0)]
    return int(np.unique(times).size)


def paper_counts(g: TemporalGraph, t0: float, t_a: float = 0.0) -> np.ndarray:
    """Vectorised :func:`paper_count` for every node."""
    node = np.repeat(np.arange(g.n_nodes), np.diff(g.node_time_ptr))
    val = g.node_time_val
    # values are sorted within each node, so duplicates are adjacent
    first = np.ones(val.size, dtype=bool)
    first[1:] = (node[1:] != node[:-1]) | (val[1:] != val[:-1])
    keep = first & (val >= t_a) & (val < t0)
    return np.bincount(node[keep], minlength=g.n_nodes)


def records_to_text(records: Sequence[tuple[int, int, int]], path) -> None:
    with open(path, "w") as fh:
        for u, v, d in records:
            fh.write(f"{u} {v} {d}\n")
