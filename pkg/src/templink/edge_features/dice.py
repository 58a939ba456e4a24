"""Dice similarity between node pairs, a node and a set, and a set with itself.

The set forms are ratios of sums over all member pairs, evaluated with sparse
adjacency products so no pair list is ever materialised::

    d(u, V) = 2 sum_v |N(u) & N(v)| / (|N(u)| |V| + sum_v |N(v)|)
    d(V, V) = 2 sum_w C(k_w, 2) / (sum_w k_w (|V| - 1)),   k_w = |N(w) & V|
"""
from __future__ import annotations

import numpy as np

from ..temporal_graph import GraphView

__all__ = [
    "dice",
    "dice_pairs",
    "dice_node_set",
    "dice_node_set_counts",
    "dice_node_set_all",
    "dice_set_set",
    "dice_set_set_counts",
]


def dice(view: GraphView, u: int, v: int) -> float:
    if u == v:
        raise ValueError("dice needs two distinct nodes")
    view = view.undirected()
    nu, nv = view.neighbors(u), view.neighbors(v)
    denom = nu.size + nv.size
    if denom == 0:
        return 0.0
    common = np.intersect1d(nu, nv, assume_unique=True).size
    return 2.0 * common / denom


def dice_pairs(view: GraphView, us, vs, chunk: int = 200_000) -> np.ndarray:
    """Vectorised :func:`dice` for aligned arrays of node ids."""
    us = np.asarray(us, dtype=np.int64)
    vs = np.asarray(vs, dtype=np.int64)
    view = view.undirected()
    adj = view.adj
    deg = view.degree()
    out = np.zeros(us.size)
    for lo in range(0, us.size, chunk):
        a, b = us[lo:lo + chunk], vs[lo:lo + chunk]
        common = np.asarray(adj[a].multiply(adj[b]).sum(axis=1)).ravel()
        denom = deg[a] + deg[b]
        out[lo:lo + chunk] = np.where(denom > 0, 2.0 * common / np.maximum(denom, 1), 0.0)
    return out


def _indicator(n: int, nodes) -> np.ndarray:
    ind = np.zeros(n, dtype=np.int64)
    ind[np.asarray(list(nodes), dtype=np.int64)] = 1
    return ind


def dice_node_set_all(view: GraphView, V) -> tuple[np.ndarray, np.ndarray]:
    """Integer numerators and denominators of ``d(x, V)`` for every node x.

    A node that belongs to V is not paired with itself.
    """
    view = view.undirected()
    n = view.n_nodes
    ind = _indicator(n, V)
    size_v = int(ind.sum())
    if size_v == 0:
        raise ValueError("empty node set")
    adj = view.adj.astype(np.int64)
    deg = view.degree().astype(np.int64)
    k = adj @ ind                  # |N(w) & V| for every w
    shared = adj @ k               # sum_{v in V} |N(x) & N(v)|, self-pair included
    deg_v = int(deg[ind == 1].sum())
    self_in = ind == 1
    num = 2 * (shared - np.where(self_in, deg, 0))
    den = deg * (size_v - self_in) + (deg_v - np.where(self_in, deg, 0))
    return num, den


def dice_node_set_counts(view: GraphView, u: int, V) -> tuple[int, int]:
    num, den = dice_node_set_all(view, V)
    return int(num[u]), int(den[u])


def dice_node_set(view: GraphView, u: int, V) -> float:
    num, den = dice_node_set_counts(view, u, V)
    return num / den if den else 0.0


def dice_set_set_counts(view: GraphView, V) -> tuple[int, int]:
    members = np.unique(np.asarray(list(V), dtype=np.int64))
    if members.size < 2:
        raise ValueError("set-to-set dice needs at least two nodes")
    ind = _indicator(view.n_nodes, members)
    k = view.undirected().adj.astype(np.int64) @ ind
    num = int((k * (k - 1)).sum())  # 2 * sum C(k, 2)
    den = int(k.sum()) * (members.size - 1)
    return num, den


def dice_set_set(view: GraphView, V) -> float:
    num, den = dice_set_set_counts(view, V)
    return num / den if den else 0.0
