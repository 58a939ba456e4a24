"""End-to-end stages: features, embeddings, training set, classifier, ranking.

Every stage is a pure function of its inputs and the config seeds. The
classifier is fitted at ``cfg.t0`` and applied with features recomputed at
``cfg.t_predict`` (the end of the observed data).
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ..cold_start import build_defaults, newborn_set
from ..dataset import (
    PairFeaturizer,
    Scaler,
    TrainingSet,
    collect_positives,
    fit_scaler,
    inject_unseen_seen,
    sample_negatives,
    stratified_kfold,
)
from ..edge_features.hoprec import EmbeddingTable, train_embeddings, truncate_for_embedding
from ..evaluation import AucReport, RankingSubmission, auc, rank_pairs
from ..models import predict_proba, train_logistic, train_mlp
from ..node_features import NodeFeatureTable, build_context, compute_node_features
from ..temporal_graph import TemporalGraph, snapshot
from .config import PipelineConfig

log = logging.getLogger(__name__)


@dataclass(eq=False)
class Stage:
    """Everything derived from the graph at one reference time."""

    t: float
    features: NodeFeatureTable
    table: EmbeddingTable
    truncation: tuple


def build_stage(g: TemporalGraph, t: float, cfg: PipelineConfig,
                table: EmbeddingTable | None = None) -> Stage:
    threads = 1 if cfg.deterministic else cfg.threads
    feats = compute_node_features(g, t, cfg.dt, threads=threads)
    rep = truncate_for_embedding(g, cfg.t_cut, t)
    if table is None:
        table = train_embeddings(rep.view, cfg.embed_params())
    return Stage(t, feats, table, (rep.removed_edge_pct, rep.removed_node_pct))


def featurizer(g: TemporalGraph, stage: Stage, cfg: PipelineConfig) -> PairFeaturizer:
    view = snapshot(g, 0.0, stage.t)
    seen = stage.features.seen
    defaults = None
    if cfg.imputation != "zero":
        nb = newborn_set(g, stage.t, cfg.newborn_width)
        defaults = build_defaults(stage.features.matrix, view, stage.table, nb, seen,
                                  population=cfg.imputation)
    return PairFeaturizer(stage.features.matrix, seen, view, stage.table, defaults)


def build_training_set(g: TemporalGraph, stage: Stage, cfg: PipelineConfig) -> TrainingSet:
    """Balanced seen-seen examples at ``stage.t`` plus the unseen-seen injection.

    ``kind`` is 0 for seen-seen rows and 1 for injected rows.
    """
    t0 = stage.t
    pos = collect_positives(g, t0)
    if pos.shape[0] == 0:
        raise RuntimeError(f"no positive examples after t0={t0}")
    neg = sample_negatives(g, t0, pos.shape[0], cfg.data_seed)
    pairs = np.concatenate([pos, neg])
    y = np.concatenate([np.ones(len(pos), dtype=np.int64), np.zeros(len(neg), dtype=np.int64)])
    kind = np.zeros(len(pairs), dtype=np.int64)
    if cfg.inject_fraction > 0 and cfg.imputation != "zero":
        ipairs, iy = inject_unseen_seen(g, t0, len(pairs), cfg.inject_fraction, cfg.data_seed + 1)
        pairs = np.concatenate([pairs, ipairs])
        y = np.concatenate([y, iy])
        kind = np.concatenate([kind, np.ones(len(iy), dtype=np.int64)])
    X = featurizer(g, stage, cfg).transform(pairs)
    plan = stratified_kfold(y, cfg.k_folds, cfg.data_seed, cfg.fit_fraction)
    fit = plan.fit_mask()
    scaler = fit_scaler(X[fit])
    meta = {
        "t0": t0, "dt": cfg.dt, "seed": cfg.data_seed,
        "n_positive": int(len(pos)), "n_negative": int(len(neg)), "n_injected": int(kind.sum()),
        "folds": plan.folds.tolist(), "k": plan.k, "fit_fraction": plan.fit_fraction,
        "scaler": scaler.to_dict(),
        "truncation_pct": list(stage.truncation),
    }
    return TrainingSet(X, y, pairs, kind, meta)


def split_and_scale(ts: TrainingSet):
    folds = np.asarray(ts.meta["folds"])
    n_fit = min(max(int(round(ts.meta["fit_fraction"] * ts.meta["k"])), 1), ts.meta["k"] - 1)
    fit = ~np.isin(folds, np.arange(ts.meta["k"] - n_fit))
    scaler = Scaler.from_dict(ts.meta["scaler"])
    Z = scaler.apply(ts.X)
    return Z[fit], ts.y[fit], Z[~fit], ts.y[~fit], scaler


def train_classifier(ts: TrainingSet, cfg: PipelineConfig, kind: str | None = None):
    kind = kind or cfg.classifier
    Xf, yf, Xv, yv, scaler = split_and_scale(ts)
    if kind == "logistic":
        model = train_logistic(Xf, yf, l2=cfg.logistic_l2)
    else:
        model = train_mlp(Xf, yf, cfg.arch, cfg.model_seed, X_val=Xv, y_val=yv,
                          lr=cfg.mlp_lr, batch_size=cfg.mlp_batch, max_epochs=cfg.mlp_max_epochs,
                          alpha=cfg.mlp_alpha, patience=cfg.mlp_patience)
    return model, scaler


def predict_pairs(g: TemporalGraph, stage: Stage, model, scaler: Scaler, pairs_dense: np.ndarray,
                  cfg: PipelineConfig):
    """Return ``(scores, raw_features)``; scores are model logits."""
    X = featurizer(g, stage, cfg).transform(pairs_dense)
    Z = scaler.apply(X)
    return model.decision_function(Z), X


@dataclass(eq=False)
class PipelineResult:
    scores: dict
    reports: dict = field(default_factory=dict)
    submission: RankingSubmission | None = None
    timings: dict = field(default_factory=dict)
    training: TrainingSet | None = None
    models: dict = field(default_factory=dict)
    stages: tuple = ()


def run_pipeline(g: TemporalGraph, pairs, cfg: PipelineConfig, labels=None,
                 classifiers=None, stages: tuple[Stage, Stage] | None = None) -> PipelineResult:
    """Fit at ``cfg.t0``, score ``pairs`` (original ids) at ``cfg.t_predict``.

    ``scores`` always includes ``"hoprec"``, the raw embedding-score column, as
    the embedding-only baseline.
    """
    classifiers = classifiers or (cfg.classifier,)
    timings = {}
    t_start = time.perf_counter()
    if stages is None:
        train_stage = build_stage(g, cfg.t0, cfg)
        pred_stage = build_stage(g, cfg.t_predict, cfg)
    else:
        train_stage, pred_stage = stages
    timings["features+embeddings"] = time.perf_counter() - t_start

    t = time.perf_counter()
    ts = build_training_set(g, train_stage, cfg)
    timings["dataset"] = time.perf_counter() - t

    dense = g.dense_ids(np.asarray(pairs).ravel()).reshape(-1, 2)
    scores, models = {}, {}
    X_pred = None
    for kind in classifiers:
        t = time.perf_counter()
        model, scaler = train_classifier(ts, cfg, kind)
        s, X_pred = predict_pairs(g, pred_stage, model, scaler, dense, cfg)
        scores[kind] = s
        models[kind] = (model, scaler)
        timings[kind] = time.perf_counter() - t
    scores["hoprec"] = X_pred[:, -2]

    result = PipelineResult(scores, timings=timings, training=ts, models=models,
                            stages=(train_stage, pred_stage))
    result.submission = rank_pairs(scores[classifiers[0]])
    if labels is not None:
        result.reports = {k: auc(v, labels) for k, v in scores.items()}
    timings["total"] = time.perf_counter() - t_start
    return result
