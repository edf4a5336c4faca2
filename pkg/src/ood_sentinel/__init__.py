"""Encoder-agnostic OOD detection over composed latent representations.

Pipeline: read embedding matrices (EMB1 files), compose working vectors
from encoder latents and language-similarity features per a small recipe
DSL, calibrate a Gamma threshold on cosine distances to the in-distribution
mean, then detect and evaluate across corruption types.
"""

from .calibration import (
    DetectorModel,
    Provenance,
    calibrate,
    distance,
    load_model,
    mean_vector,
    save_model,
    split_id,
)
from .detection import DetectionResult, batch_detect, classify, score
from .embedding_io import (
    DatasetManifest,
    EmbeddingSet,
    ManifestEntry,
    PromptFiles,
    read_embedding_file,
    read_manifest,
    write_embedding_file,
    write_manifest,
)
from .errors import EngineError
from .evaluation import (
    ConfusionMatrix,
    EvaluationReport,
    accuracy,
    aggregate_row,
    build_test_mix,
    confusion,
    evaluate_grid,
    f1,
    fpr,
    render_report,
)
from .gamma import GammaFit, GammaParams, fit_gamma, gamma_cdf, gamma_quantile
from .recipe import Recipe, parse_recipe, recipe_dimension, render_recipe
from .representation import (
    LanguageFeatures,
    OmegaVector,
    compose,
    cosine_similarity,
    language_features,
)

__version__ = "0.1.0"

__all__ = [
    "DatasetManifest",
    "DetectionResult",
    "DetectorModel",
    "ConfusionMatrix",
    "EmbeddingSet",
    "EngineError",
    "EvaluationReport",
    "GammaFit",
    "GammaParams",
    "LanguageFeatures",
    "ManifestEntry",
    "OmegaVector",
    "PromptFiles",
    "Provenance",
    "Recipe",
    "accuracy",
    "aggregate_row",
    "batch_detect",
    "build_test_mix",
    "calibrate",
    "classify",
    "compose",
    "confusion",
    "cosine_similarity",
    "distance",
    "evaluate_grid",
    "f1",
    "fit_gamma",
    "fpr",
    "gamma_cdf",
    "gamma_quantile",
    "language_features",
    "load_model",
    "mean_vector",
    "parse_recipe",
    "read_embedding_file",
    "read_manifest",
    "recipe_dimension",
    "render_recipe",
    "render_report",
    "save_model",
    "score",
    "split_id",
    "write_embedding_file",
    "write_manifest",
]
