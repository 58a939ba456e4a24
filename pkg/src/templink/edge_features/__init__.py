"""Pair-level features: Dice similarity and random-walk embedding scores."""
from .dice import (
    dice,
    dice_node_set,
    dice_node_set_all,
    dice_node_set_counts,
    dice_pairs,
    dice_set_set,
    dice_set_set_counts,
)
from .hoprec import (
    EmbeddingTable,
    EmbedParams,
    MissingEmbedding,
    TruncationReport,
    hoprec_score,
    hoprec_scores,
    random_walks,
    train_embeddings,
    truncate_for_embedding,
)

__all__ = [
    "dice",
    "dice_node_set",
    "dice_node_set_all",
    "dice_node_set_counts",
    "dice_pairs",
    "dice_set_set",
    "dice_set_set_counts",
    "EmbeddingTable",
    "EmbedParams",
    "MissingEmbedding",
    "TruncationReport",
    "hoprec_score",
    "hoprec_scores",
    "random_walks",
    "train_embeddings",
    "truncate_for_embedding",
]
