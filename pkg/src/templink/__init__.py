"""Link prediction on growing temporal networks.

Typical use::

    from templink import ingest, load_config, run_pipeline
    g = ingest(records)
    result = run_pipeline(g, pairs, load_config("config.toml"))
"""
__version__ = "0.1.0"

from .cold_start import ImputedDefaults, build_defaults, newborn_set
from .dataset import PairFeaturizer, TrainingSet, stratified_kfold
from .edge_features import EmbedParams, EmbeddingTable, dice, train_embeddings
from .evaluation import auc, compare_models, rank_pairs
from .harness.config import PipelineConfig, load_config
from .harness.pipeline import run_pipeline
from .harness.synthetic import SyntheticSpec, generate_synthetic
from .models import predict_proba, train_logistic, train_mlp
from .node_features import compute_node_features, pagerank
from .temporal_graph import TemporalGraph, ingest, read_records, snapshot

__all__ = [
    "ImputedDefaults", "build_defaults", "newborn_set",
    "PairFeaturizer", "TrainingSet", "stratified_kfold",
    "EmbedParams", "EmbeddingTable", "dice", "train_embeddings",
    "auc", "compare_models", "rank_pairs",
    "PipelineConfig", "load_config", "run_pipeline",
    "SyntheticSpec", "generate_synthetic",
    "predict_proba", "train_logistic", "train_mlp",
    "compute_node_features", "pagerank",
    "TemporalGraph", "ingest", "read_records", "snapshot",
]
