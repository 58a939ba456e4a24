"""Synthetic growing networks with a planted triadic-closure signal.

Nodes arrive over an observation period and a shorter future period, each
through one attachment record. Every other record either repeats an existing
edge, closes a triangle, or joins a random pair (degree-proportional or
uniform endpoints). Only the observation period is emitted as records. Pairs
that first link during the future period are the positive test pairs;
negatives are uniform pairs that never link.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..temporal_graph import records_to_text


@dataclass
class SyntheticSpec:
    """Growth model parameters.

    ``future_arrival_share`` of the non-initial nodes arrive during the future
    period; they have no observed record and are the cold-start nodes of the
    test pairs. With ``closure_prob = 0`` and ``pref_attachment = 0`` every
    endpoint is uniform over the active nodes (the no-signal null model).
    """

    n_nodes: int = 2000
    obs_days: int = 1000
    future_days: int = 150
    records_per_day: int = 30
    initial_nodes: int = 30
    closure_prob: float = 0.8
    pref_attachment: float = 0.8
    repeat_prob: float = 0.25
    future_arrival_share: float = 0.25
    max_test_pos: int = 3000
    neg_ratio: float = 1.0
    seed: int = 0

    def __post_init__(self):
        for name in ("closure_prob", "pref_attachment", "repeat_prob", "future_arrival_share"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.initial_nodes < 2 or self.initial_nodes > self.n_nodes:
            raise ValueError("initial_nodes out of range")


@dataclass(eq=False)
class SyntheticBenchmark:
    records: list          # (u, v, day) for the observation period
    pairs: np.ndarray      # (m, 2) test pairs, original ids
    labels: np.ndarray     # 1 if the pair links during the future period
    unseen: np.ndarray     # original ids with no observed record
    spec: SyntheticSpec

    def write(self, out_dir) -> dict:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "records": out / "records.txt",
            "pairs": out / "pairs.txt",
            "labels": out / "labels.txt",
        }
        records_to_text(self.records, paths["records"])
        with open(paths["pairs"], "w") as fh:
            for u, v in self.pairs:
                fh.write(f"{u} {v}\n")
        paths["labels"].write_text("".join(f"{int(x)}\n" for x in self.labels))
        return paths

    def unseen_pair_share(self) -> float:
        s = set(self.unseen.tolist())
        hit = [(u in s) or (v in s) for u, v in self.pairs.tolist()]
        return float(np.mean(hit))


class _Growth:
    def __init__(self, n: int, rng: np.random.Generator):
        self.rng = rng
        self.nbrs: list[list[int]] = [[] for _ in range(n)]
        self.nbr_sets: list[set] = [set() for _ in range(n)]
        self.edges: list[tuple[int, int]] = []
        self.ends: list[int] = []    # each edge contributes both endpoints

    def add(self, u: int, v: int) -> None:
        if v not in self.nbr_sets[u]:
            self.nbr_sets[u].add(v)
            self.nbr_sets[v].add(u)
            self.nbrs[u].append(v)
            self.nbrs[v].append(u)
            self.edges.append((min(u, v), max(u, v)))
            self.ends.extend((u, v))

    def endpoint(self, n_active: int, pref: float) -> int:
        rng = self.rng
        if self.ends and rng.random() < pref:
            return self.ends[int(rng.integers(len(self.ends)))]
        return int(rng.integers(n_active))

    def closure(self) -> tuple[int, int] | None:
        if not self.ends:
            return None
        rng = self.rng
        u = self.ends[int(rng.integers(len(self.ends)))]
        w = self.nbrs[u][int(rng.integers(len(self.nbrs[u])))]
        v = self.nbrs[w][int(rng.integers(len(self.nbrs[w])))]
        if v == u or v in self.nbr_sets[u]:
            return None
        return u, v


def _activation_days(spec: SyntheticSpec, rng) -> np.ndarray:
    rest = spec.n_nodes - spec.initial_nodes
    n_future = int(round(spec.future_arrival_share * rest))
    return np.concatenate([
        np.zeros(spec.initial_nodes, dtype=np.int64),
        np.sort(rng.integers(0, spec.obs_days, rest - n_future)),
        np.sort(rng.integers(spec.obs_days, spec.obs_days + spec.future_days, n_future)),
    ])


def _uniform_non_edges(rng, n: int, count: int, forbidden: set) -> np.ndarray:
    out: list = []
    taken: set = set()
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > 100 * count + 10_000:
            raise RuntimeError("could not sample enough negative test pairs")
        u, v = (int(x) for x in rng.integers(n, size=2))
        key = (min(u, v), max(u, v))
        if u == v or key in forbidden or key in taken:
            continue
        taken.add(key)
        out.append(key)
    return np.array(out, dtype=np.int64).reshape(-1, 2)


def generate_synthetic(spec: SyntheticSpec) -> SyntheticBenchmark:
    """Simulate the network and draw the labelled test pairs (deterministic per seed)."""
    rng = np.random.default_rng(spec.seed)
    n = spec.n_nodes
    activation = _activation_days(spec, rng)
    growth = _Growth(n, rng)
    records: list[tuple[int, int, int]] = []
    future_new: list[tuple[int, int]] = []

    p_rep = spec.repeat_prob
    p_close = (1.0 - p_rep) * spec.closure_prob
    total_days = spec.obs_days + spec.future_days
    n_prev = 0
    for day in range(total_days):
        n_active = int(np.searchsorted(activation, day, side="right"))
        fresh = range(max(n_prev, 2), n_active)
        n_prev = n_active
        for _ in range(spec.records_per_day + len(fresh)):
            if fresh:
                # a newly active node enters through one attachment record
                u, fresh = fresh[0], fresh[1:]
                pair = (u, growth.endpoint(u, spec.pref_attachment))
            else:
                pair = None
                r = rng.random()
                if r < p_rep and growth.edges:
                    pair = growth.edges[int(rng.integers(len(growth.edges)))]
                elif r < p_rep + p_close:
                    pair = growth.closure()
                if pair is None:
                    u = growth.endpoint(n_active, spec.pref_attachment)
                    v = growth.endpoint(n_active, spec.pref_attachment)
                    if u == v:
                        continue
                    pair = (u, v)
            u, v = pair
            if day >= spec.obs_days:
                if v not in growth.nbr_sets[u]:
                    future_new.append((min(u, v), max(u, v)))
            else:
                records.append((u, v, day))
            growth.add(u, v)

    observed_nodes = np.zeros(n, dtype=bool)
    for u, v, _ in records:
        observed_nodes[u] = observed_nodes[v] = True

    pos = np.array(future_new, dtype=np.int64).reshape(-1, 2)
    if len(pos) > spec.max_test_pos:
        pos = pos[np.sort(rng.choice(len(pos), spec.max_test_pos, replace=False))]
    neg = _uniform_non_edges(rng, n, int(round(spec.neg_ratio * len(pos))), set(growth.edges))

    pairs = np.concatenate([pos, neg])
    labels = np.concatenate([np.ones(len(pos), dtype=np.int64), np.zeros(len(neg), dtype=np.int64)])
    shuffle = rng.permutation(len(pairs))
    pairs, labels = pairs[shuffle], labels[shuffle]

    # hide internal ids (which follow activation order)
    relabel = rng.permutation(n)
    records = [(int(relabel[u]), int(relabel[v]), d) for u, v, d in records]
    return SyntheticBenchmark(records, relabel[pairs], labels,
                              np.sort(relabel[np.flatnonzero(~observed_nodes)]), spec)
