"""ROC-AUC, ranked submissions and model comparison tables."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.stats import rankdata


@dataclass(frozen=True)
class AucReport:
    auc: float
    n_pos: int
    n_neg: int
    ties: str = "half credit per tied positive/negative pair"


def auc(scores, labels) -> AucReport:
    """Mann-Whitney AUC from average ranks.

    Tied positive/negative pairs count one half, so the result equals the
    pairwise count ``(wins + ties / 2) / (P * N)``.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = int(labels.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both positive and negative labels")
    ranks = rankdata(scores)  # average ranks, exact halves on ties
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return AucReport(float(u / (n_pos * n_neg)), n_pos, n_neg)


def auc_bruteforce(scores, labels) -> float:
    """O(P*N) reference implementation."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    pos, neg = scores[labels], scores[~labels]
    diff = pos[:, None] - neg[None, :]
    return float(((diff > 0).sum() + 0.5 * (diff == 0).sum()) / (pos.size * neg.size))


@dataclass(frozen=True, eq=False)
class RankingSubmission:
    order: np.ndarray
    scores: np.ndarray

    def save_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.order.tolist()))

    def save_csv(self, path, pairs=None) -> None:
        """``pair_index,u,v,score`` rows in ranked order."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["pair_index", "u", "v", "score"])
            for i in self.order:
                u, v = (pairs[i] if pairs is not None else ("", ""))
                w.writerow([int(i), u, v, repr(float(self.scores[i]))])


def rank_pairs(scores) -> RankingSubmission:
    """Indices by descending score; equal scores keep ascending index order."""
    scores = np.asarray(scores, dtype=np.float64)
    if not np.isfinite(scores).all():
        raise ValueError("non-finite score")
    order = np.argsort(-scores, kind="stable")
    return RankingSubmission(order, scores)


def load_submission(path) -> np.ndarray:
    return np.asarray(json.loads(Path(path).read_text()), dtype=np.int64)


def compare_models(reports: dict) -> list[dict]:
    """Rows sorted by AUC (descending, then name); every top scorer is flagged best."""
    if not reports:
        raise ValueError("nothing to compare")
    vals = {k: (r.auc if isinstance(r, AucReport) else float(r)) for k, r in reports.items()}
    top = max(vals.values())
    n_top = sum(v == top for v in vals.values())
    rows = []
    for name in sorted(vals, key=lambda k: (-vals[k], k)):
        rows.append({
            "model": name,
            "auc": vals[name],
            "best": vals[name] == top,
            "tie": vals[name] == top and n_top > 1,
        })
    return rows


def format_comparison(rows: list[dict]) -> str:
    lines = [f"{'model':<24} {'AUC':>8}"]
    for r in rows:
        flag = " *" if r["best"] else ""
        if r["tie"]:
            flag += " (tie)"
        lines.append(f"{r['model']:<24} {r['auc']:>8.5f}{flag}")
    return "\n".join(lines)


def write_report(path, reports: dict, extra: dict | None = None) -> None:
    body = {
        "models": {k: asdict(r) if isinstance(r, AucReport) else r for k, r in reports.items()},
        "comparison": compare_models(reports),
    }
    if extra:
        body.update(extra)
    Path(path).write_text(json.dumps(body, indent=1))
