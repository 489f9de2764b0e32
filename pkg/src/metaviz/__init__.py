"""Spectral assessment and fusion of multiple data visualizations.

Given K candidate embeddings of the same n samples, each candidate is scored
at every sample by the leading eigenvector of the K x K similarity matrix of
its row-normalized distance rows. The scores weight a row-wise combination of
the candidates (the meta-distance), which any distance-based embedder turns
into a final meta-visualization.
"""

from . import kernels
from .embedders import EmbedderConfig, meta_embed
from .errors import MetavizError, ValidationError
from .fusion import naive_meta_distance, spectral_meta_distance, symmetrize
from .geometry import full_normalized_matrix, normalized_distance_row
from .model import (
    CandidateSet,
    DistortionModel,
    Embedding,
    EigenscoreMatrix,
    GroundTruthDistance,
    MetaDistance,
    validate_candidate_set,
)
from .spectral import eigenscore_matrix, score_and_fuse

__version__ = "0.1.0"

__all__ = [
    "CandidateSet",
    "DistortionModel",
    "EigenscoreMatrix",
    "EmbedderConfig",
    "Embedding",
    "GroundTruthDistance",
    "MetaDistance",
    "MetavizError",
    "ValidationError",
    "eigenscore_matrix",
    "full_normalized_matrix",
    "kernels",
    "meta_embed",
    "naive_meta_distance",
    "normalized_distance_row",
    "score_and_fuse",
    "spectral_meta_distance",
    "symmetrize",
    "validate_candidate_set",
]
