"""Newborn population and imputed features for nodes with no history.

An unseen node is treated as a node born in the future, so it borrows the
average features of the nodes born in ``(t0 - width, t0]``. Edge features
involving unseen nodes are averages over pairs drawn from the same
population; Dice uses the closed set forms, HOP-rec uses exact means of
unit-vector dot products.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .edge_features.dice import dice_node_set_all, dice_set_set_counts
from .edge_features.hoprec import EmbeddingTable
from .temporal_graph import GraphView, TemporalGraph

POPULATIONS = ("newborn", "seen")


class EdgeFeaturePair(NamedTuple):
    hoprec: float
    dice: float


@dataclass(frozen=True, eq=False)
class NewbornSet:
    t0: float
    members: np.ndarray
    width: float = 0.1

    def __len__(self) -> int:
        return int(self.members.size)


def newborn_set(g: TemporalGraph, t0: float, width: float = 0.1) -> NewbornSet:
    """Nodes with ``t0 - width < birth <= t0``."""
    if not width < t0:
        raise ValueError("newborn window must be narrower than t0")
    members = np.flatnonzero((g.birth > t0 - width) & (g.birth <= t0))
    if members.size == 0:
        raise ValueError(f"no newborn nodes in ({t0 - width}, {t0}]")
    return NewbornSet(t0, members, width)


def impute_node_features(newborns: NewbornSet, features: np.ndarray) -> np.ndarray:
    """Component-wise mean of the population's feature rows."""
    if len(newborns) == 0:
        raise ValueError("empty newborn set")
    return features[newborns.members].mean(axis=0)


def mean_pair_cosine(unit: np.ndarray) -> float:
    """Mean cosine over ordered pairs of distinct rows of a row-normalised matrix.

    Uses ``|sum x|^2 = sum_i |x_i|^2 + sum_{i != j} x_i . x_j``; zero rows
    contribute cosine 0.
    """
    m = unit.shape[0]
    if m < 2:
        return 0.0
    total = unit.sum(axis=0)
    self_dots = float(np.einsum("ij,ij->", unit, unit))
    return float((total @ total - self_dots) / (m * (m - 1)))


@dataclass(eq=False)
class ImputedDefaults:
    """Imputed values for one reference time.

    ``dice_us`` and ``hoprec_us`` are indexed by node id: entry ``v`` is the
    imputed edge feature between any unseen node and ``v``.
    """

    node_mean: np.ndarray
    dice_uu: float
    dice_us: np.ndarray
    hoprec_uu: float
    hoprec_us: np.ndarray
    population: str = "newborn"
    population_size: int = 0

    def to_json(self) -> str:
        return json.dumps({
            "node_mean": self.node_mean.tolist(),
            "dice_uu": self.dice_uu,
            "hoprec_uu": self.hoprec_uu,
            "population": self.population,
            "population_size": self.population_size,
        })


def build_defaults(features: np.ndarray, view: GraphView, table: EmbeddingTable,
                   newborns: NewbornSet, seen: np.ndarray,
                   population: str = "newborn") -> ImputedDefaults:
    """Precompute every imputed quantity for one reference time.

    Parameters
    ----------
    features : ndarray
        ``(n_nodes, 31)`` node feature matrix; only seen rows are read.
    view : GraphView
        Undirected graph at the reference time (Dice is evaluated here).
    table : EmbeddingTable
        Embeddings; population members without a vector are skipped in the
        HOP-rec means.
    newborns : NewbornSet
    seen : ndarray of bool
    population : {"newborn", "seen"}
        Averaging population for both node and edge features.
    """
    if population == "newborn":
        pop = newborns.members
    elif population == "seen":
        pop = np.flatnonzero(seen)
    else:
        raise ValueError(f"unknown imputation population {population!r}")
    node_mean = features[pop].mean(axis=0)

    num, den = dice_node_set_all(view, pop)
    dice_us = np.divide(num, den, out=np.zeros(num.size), where=den > 0)
    if pop.size >= 2:
        n_uu, d_uu = dice_set_set_counts(view, pop)
        dice_uu = n_uu / d_uu if d_uu else 0.0
    else:
        dice_uu = 0.0

    unit = table.unit()
    with_vec = pop[table.mask[pop]]
    hoprec_us = np.zeros(table.n_nodes)
    if with_vec.size:
        # a member is not paired with itself (matching the Dice set forms)
        sums = unit @ unit[with_vec].sum(axis=0)
        counts = np.full(table.n_nodes, float(with_vec.size))
        sums[with_vec] -= np.einsum("ij,ij->i", unit[with_vec], unit[with_vec])
        counts[with_vec] -= 1
        np.divide(sums, counts, out=hoprec_us, where=counts > 0)
    hoprec_us = np.where(table.mask, hoprec_us, np.nan)
    hoprec_uu = mean_pair_cosine(unit[with_vec])
    return ImputedDefaults(node_mean, float(dice_uu), dice_us, hoprec_uu, hoprec_us,
                           population, int(pop.size))


def impute_edge_unseen_unseen(defaults: ImputedDefaults) -> EdgeFeaturePair:
    return EdgeFeaturePair(defaults.hoprec_uu, defaults.dice_uu)


def impute_edge_unseen_seen(defaults: ImputedDefaults, v: int,
                            seen: np.ndarray | None = None) -> EdgeFeaturePair:
    if seen is not None and not seen[v]:
        raise ValueError(f"node {v} is not seen")
    h = defaults.hoprec_us[v]
    if np.isnan(h):
        h = defaults.hoprec_uu
    return EdgeFeaturePair(float(h), float(defaults.dice_us[v]))
