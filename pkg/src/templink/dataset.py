"""Training examples at a reference time and the 64-column pair layout.

Pair layout: ``[min(f(u), f(v)) (31), max(f(u), f(v)) (31), hoprec, dice]``.
Only the 62 node columns are standardised.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cold_start import EdgeFeaturePair, ImputedDefaults
from .edge_features.dice import dice_pairs
from .edge_features.hoprec import EmbeddingTable, hoprec_scores
from .node_features import FEATURE_NAMES, N_FEATURES
from .temporal_graph import GraphView, TemporalGraph

log = logging.getLogger(__name__)

N_NODE_COLS = 2 * N_FEATURES
N_COLS = N_NODE_COLS + 2
COLUMN_NAMES = (
    tuple(f"min_{c}" for c in FEATURE_NAMES)
    + tuple(f"max_{c}" for c in FEATURE_NAMES)
    + ("hoprec", "dice")
)
STD_FLOOR = 1e-12


# -- example collection -------------------------------------------------------

def collect_positives(g: TemporalGraph, t0: float) -> np.ndarray:
    """Seen-seen pairs whose first record falls after ``t0``, as ``(k, 2)``."""
    first = g.edge_first_time()
    seen = g.seen(t0)
    keep = (first > t0) & seen[g.edge_u] & seen[g.edge_v]
    return np.column_stack([g.edge_u[keep], g.edge_v[keep]])


def collect_unseen_seen_positives(g: TemporalGraph, t0: float) -> np.ndarray:
    """Post-``t0`` edges with exactly one unseen endpoint, as ``(unseen, seen)`` rows."""
    seen = g.seen(t0)
    su, sv = seen[g.edge_u], seen[g.edge_v]
    keep = (g.edge_first_time() > t0) & (su ^ sv)
    u, v = g.edge_u[keep], g.edge_v[keep]
    swap = seen[u]
    return np.column_stack([np.where(swap, v, u), np.where(swap, u, v)])


def _rejection_sample(pool_a: np.ndarray, pool_b: np.ndarray, count: int, n: int,
                      forbidden: np.ndarray, rng: np.random.Generator,
                      max_rounds: int = 50) -> np.ndarray:
    """Distinct unordered pairs (a in pool_a, b in pool_b, a != b) avoiding
    ``forbidden`` keys (``min * n + max``, sorted)."""
    chosen: list[np.ndarray] = []
    taken = np.empty(0, dtype=np.int64)
    need = count
    for _ in range(max_rounds):
        if need <= 0:
            break
        draw = max(2 * need, 64)
        a = pool_a[rng.integers(0, pool_a.size, draw)]
        b = pool_b[rng.integers(0, pool_b.size, draw)]
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        keys = lo * n + hi
        ok = lo != hi
        ok &= ~np.isin(keys, forbidden, assume_unique=False)
        ok &= ~np.isin(keys, taken)
        keys = keys[ok]
        _, first = np.unique(keys, return_index=True)
        keys = keys[np.sort(first)][:need]
        chosen.append(keys)
        taken = np.sort(np.concatenate([taken, keys]))
        need -= keys.size
    if need > 0:
        raise RuntimeError(f"negative sampling failed: {need} of {count} pairs not found")
    keys = np.concatenate(chosen) if chosen else np.empty(0, dtype=np.int64)
    return np.column_stack([keys // n, keys % n])


def sample_negatives(g: TemporalGraph, t0: float, count: int, seed: int,
                     exclude: np.ndarray | None = None) -> np.ndarray:
    """Uniform seen-seen pairs that never become edges (checked against all records)."""
    seen = np.flatnonzero(g.seen(t0))
    n_pairs = seen.size * (seen.size - 1) // 2
    edge_keys = g.edge_keys()
    n_seen_edges = int((g.seen(t0)[g.edge_u] & g.seen(t0)[g.edge_v]).sum())
    if n_pairs - n_seen_edges < count:
        raise RuntimeError("negative sampling failed: not enough non-edges")
    forbidden = edge_keys
    if exclude is not None and len(exclude):
        ex = np.asarray(exclude, dtype=np.int64)
        forbidden = np.union1d(forbidden, np.minimum(ex[:, 0], ex[:, 1]) * g.n_nodes + np.maximum(ex[:, 0], ex[:, 1]))
    rng = np.random.default_rng(seed)
    return _rejection_sample(seen, seen, count, g.n_nodes, forbidden, rng)


def inject_unseen_seen(g: TemporalGraph, t0: float, base_count: int, fraction: float = 0.07,
                       seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Extra ``(unseen, seen)`` rows amounting to ``fraction * base_count``.

    Half are real post-``t0`` unseen-seen edges, half are unseen-seen pairs
    that never link. Returns ``(pairs, labels)``.
    """
    n_total = int(round(fraction * base_count))
    if n_total == 0:
        return np.empty((0, 2), dtype=np.int64), np.empty(0, dtype=np.int64)
    rng = np.random.default_rng(seed)
    n_pos = n_total // 2
    n_neg = n_total - n_pos
    pool = collect_unseen_seen_positives(g, t0)
    if pool.shape[0] < n_pos:
        log.warning("only %d unseen-seen positives available (wanted %d)", pool.shape[0], n_pos)
        n_pos = pool.shape[0]
        n_neg = n_pos
    pos = pool[np.sort(rng.choice(pool.shape[0], n_pos, replace=False))] if n_pos else pool[:0]
    seen_mask = g.seen(t0)
    unseen = np.flatnonzero(~seen_mask)
    seen = np.flatnonzero(seen_mask)
    if n_neg and unseen.size:
        neg = _rejection_sample(unseen, seen, n_neg, g.n_nodes, g.edge_keys(), rng)
        # orient as (unseen, seen)
        swap = seen_mask[neg[:, 0]]
        neg = np.column_stack([np.where(swap, neg[:, 1], neg[:, 0]), np.where(swap, neg[:, 0], neg[:, 1])])
    else:
        neg = np.empty((0, 2), dtype=np.int64)
    pairs = np.concatenate([pos, neg]).astype(np.int64)
    labels = np.concatenate([np.ones(len(pos), dtype=np.int64), np.zeros(len(neg), dtype=np.int64)])
    return pairs, labels


# -- pair vectors -------------------------------------------------------------

def pair_features(fu: np.ndarray, fv: np.ndarray, edge: EdgeFeaturePair) -> np.ndarray:
    return np.concatenate([np.minimum(fu, fv), np.maximum(fu, fv), [edge.hoprec, edge.dice]])


def pair_matrix(fu: np.ndarray, fv: np.ndarray, hoprec: np.ndarray, dice: np.ndarray) -> np.ndarray:
    """Row-wise :func:`pair_features` for stacked node vectors."""
    return np.column_stack([np.minimum(fu, fv), np.maximum(fu, fv), hoprec, dice])


@dataclass(eq=False)
class PairFeaturizer:
    """Builds pair vectors at one reference time, imputing unseen endpoints.

    A node id of -1, or any node not in ``seen``, is unseen. ``defaults=None``
    selects zero filling: unseen node vectors and unseen-involving edge
    features become 0.
    """

    features: np.ndarray
    seen: np.ndarray
    view: GraphView
    table: EmbeddingTable
    defaults: ImputedDefaults | None

    def node_rows(self, ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ids = np.asarray(ids, dtype=np.int64)
        known = ids >= 0
        is_seen = np.zeros(ids.size, dtype=bool)
        is_seen[known] = self.seen[ids[known]]
        fill = self.defaults.node_mean if self.defaults is not None else np.zeros(N_FEATURES)
        rows = np.tile(fill, (ids.size, 1))
        rows[is_seen] = self.features[ids[is_seen]]
        return rows, is_seen

    def edge_columns(self, u: np.ndarray, v: np.ndarray, su: np.ndarray, sv: np.ndarray):
        n = u.size
        dice = np.zeros(n)
        both = su & sv
        dice[both] = dice_pairs(self.view, u[both], v[both])

        has_u = np.zeros(n, dtype=bool)
        has_v = np.zeros(n, dtype=bool)
        has_u[su] = self.table.mask[u[su]]
        has_v[sv] = self.table.mask[v[sv]]
        hop = np.zeros(n)
        hb = has_u & has_v
        hop[hb] = hoprec_scores(self.table, u[hb], v[hb])

        d = self.defaults
        if d is None:
            return hop, dice
        only_u = su & ~sv
        only_v = sv & ~su
        dice[only_u] = d.dice_us[u[only_u]]
        dice[only_v] = d.dice_us[v[only_v]]
        dice[~su & ~sv] = d.dice_uu

        hop_u = has_u & ~has_v
        hop_v = has_v & ~has_u
        hop[hop_u] = d.hoprec_us[u[hop_u]]
        hop[hop_v] = d.hoprec_us[v[hop_v]]
        hop[~has_u & ~has_v] = d.hoprec_uu
        return hop, dice

    def transform(self, pairs: np.ndarray) -> np.ndarray:
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        u, v = pairs[:, 0], pairs[:, 1]
        fu, su = self.node_rows(u)
        fv, sv = self.node_rows(v)
        hop, dice = self.edge_columns(u, v, su, sv)
        return pair_matrix(fu, fv, hop, dice)


# -- standardisation ------------------------------------------------------------

@dataclass
class Scaler:
    mean: np.ndarray
    std: np.ndarray
    n_cols: int = N_NODE_COLS

    def apply(self, X: np.ndarray) -> np.ndarray:
        out = np.array(X, dtype=np.float64, copy=True)
        k = self.n_cols
        degenerate = self.std < STD_FLOOR
        scaled = (out[:, :k] - self.mean) / np.where(degenerate, 1.0, self.std)
        scaled[:, degenerate] = 0.0
        out[:, :k] = scaled
        return out

    def invert(self, Z: np.ndarray) -> np.ndarray:
        out = np.array(Z, dtype=np.float64, copy=True)
        k = self.n_cols
        out[:, :k] = out[:, :k] * self.std + self.mean
        return out

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist(), "n_cols": self.n_cols}

    @classmethod
    def from_dict(cls, d: dict) -> "Scaler":
        return cls(np.asarray(d["mean"]), np.asarray(d["std"]), d["n_cols"])


def fit_scaler(X: np.ndarray, n_cols: int = N_NODE_COLS) -> Scaler:
    if X.shape[0] == 0:
        raise ValueError("cannot fit a scaler on an empty partition")
    cols = X[:, :n_cols]
    return Scaler(cols.mean(axis=0), cols.std(axis=0), n_cols)


def apply_scaler(scaler: Scaler, X: np.ndarray) -> np.ndarray:
    return scaler.apply(X)


# -- folds ----------------------------------------------------------------------

@dataclass
class SplitPlan:
    k: int
    folds: np.ndarray
    fit_fraction: float = 0.75

    def val_folds(self) -> np.ndarray:
        n_fit = int(round(self.fit_fraction * self.k))
        n_fit = min(max(n_fit, 1), self.k - 1)
        return np.arange(self.k - n_fit)

    def fit_mask(self) -> np.ndarray:
        return ~np.isin(self.folds, self.val_folds())


def stratified_kfold(y, k: int = 4, seed: int = 0, fit_fraction: float = 0.75) -> SplitPlan:
    """Assign rows to ``k`` folds, dealing each shuffled class round-robin.

    The deal continues across classes, so fold sizes also differ by at most one.
    """
    y = np.asarray(y)
    if k < 2:
        raise ValueError("k must be at least 2")
    classes, counts = np.unique(y, return_counts=True)
    if (counts < k).any():
        raise ValueError(f"each class needs at least k={k} members")
    rng = np.random.default_rng(seed)
    order = np.concatenate([rng.permutation(np.flatnonzero(y == c)) for c in classes])
    folds = np.empty(y.size, dtype=np.int64)
    folds[order] = np.arange(order.size) % k
    return SplitPlan(k, folds, fit_fraction)


# -- persisted training set -------------------------------------------------------

@dataclass(eq=False)
class TrainingSet:
    X: np.ndarray
    y: np.ndarray
    pairs: np.ndarray
    kind: np.ndarray
    meta: dict = field(default_factory=dict)

    def save(self, path) -> None:
        """``<path>`` holds X (little-endian float64); ``<path>.json`` the manifest."""
        path = Path(path)
        self.X.astype("<f8").tofile(path)
        np.savez(str(path) + ".rows.npz", y=self.y, pairs=self.pairs, kind=self.kind)
        manifest = dict(self.meta, n_rows=int(self.X.shape[0]), n_cols=int(self.X.shape[1]),
                        columns=list(COLUMN_NAMES),
                        n_pos=int(self.y.sum()), n_neg=int((1 - self.y).sum()))
        Path(str(path) + ".json").write_text(json.dumps(manifest, indent=1))

    @classmethod
    def load(cls, path) -> "TrainingSet":
        path = Path(path)
        meta = json.loads(Path(str(path) + ".json").read_text())
        X = np.fromfile(path, dtype="<f8").reshape(meta["n_rows"], meta["n_cols"])
        with np.load(str(path) + ".rows.npz") as z:
            return cls(X.astype(np.float64), z["y"], z["pairs"], z["kind"], meta)
