"""Detector calibration: split iD data, aggregate the mean vector, fit the
distance distribution, derive the confidence threshold.

The produced DetectorModel serializes to a deterministic JSON document
(fixed key order, floats at 17 significant digits), so identical inputs and
seed give byte-identical model files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embedding_io import EmbeddingSet
from .errors import (
    AlignmentError,
    ConfigError,
    DataError,
    DimensionError,
    EngineError,
    FormatError,
    InsufficientDataError,
)
from .gamma import GammaParams, fit_gamma, gamma_cdf, gamma_quantile
from .recipe import Recipe, TermKind, parse_recipe, render_recipe, uses
from .representation import LanguageFeatures, compose, cosine_similarity, language_features
from .rng import shuffled_indices

# Distances are clamped away from zero: the Gamma support excludes 0 and a
# duplicate of the mean vector would otherwise produce epsilon = 0.
EPSILON_MIN = 1e-12
EPSILON_MAX = 2.0


def split_indices(count: int, fraction: float, seed: int) -> tuple[list[int], list[int]]:
    """Seeded Fisher-Yates shuffle; first floor(fraction*count) rows go left."""
    if count < 4:
        raise InsufficientDataError(f"splitting needs >= 4 rows, got {count}")
    if not (0.0 < fraction < 1.0):
        raise ConfigError(f"split fraction must be in (0,1), got {fraction}")
    perm = shuffled_indices(count, seed)
    n_v = int(math.floor(fraction * count))
    left, right = perm[:n_v], perm[n_v:]
    if len(left) < 2 or len(right) < 2:
        raise InsufficientDataError(
            f"split {len(left)}/{len(right)} leaves a part with < 2 rows"
        )
    return left, right


def split_id(
    embedding_set: EmbeddingSet, fraction: float, seed: int
) -> tuple[EmbeddingSet, EmbeddingSet]:
    left, right = split_indices(embedding_set.count, fraction, seed)
    return (
        EmbeddingSet(embedding_set.vectors[left].copy(), embedding_set.meta),
        EmbeddingSet(embedding_set.vectors[right].copy(), embedding_set.meta),
    )


def mean_vector(omegas) -> np.ndarray:
    """Elementwise arithmetic mean of equal-length vectors."""
    rows = [np.asarray(o, dtype=np.float64) for o in omegas]
    if not rows:
        raise InsufficientDataError("mean of an empty vector list")
    length = rows[0].size
    if any(r.size != length for r in rows):
        raise DimensionError("mean_vector needs equal-length vectors")
    return np.mean(np.stack(rows), axis=0)


def distance(omega, omega_mean) -> float:
    """epsilon = 1 - cos(omega, omega_mean), clamped to [1e-12, 2]."""
    eps = 1.0 - cosine_similarity(omega, omega_mean)
    return min(max(eps, EPSILON_MIN), EPSILON_MAX)


@dataclass(frozen=True)
class Provenance:
    seed: int
    n_v: int
    n_f: int
    encoder: str = ""


@dataclass(frozen=True)
class DetectorModel:
    recipe: Recipe
    omega_mean: np.ndarray
    gamma: GammaParams
    confidence: float
    threshold: float
    dim: int
    provenance: Provenance

    def __post_init__(self):
        if self.omega_mean.ndim != 1 or self.omega_mean.size != self.dim:
            raise DataError(
                f"omega_mean length {self.omega_mean.size} != model dim {self.dim}"
            )
        if not np.isfinite(self.omega_mean).all():
            raise DataError("omega_mean contains NaN or Inf entries")
        if not (0.0 < self.confidence < 1.0):
            raise DataError(f"confidence must be in (0,1), got {self.confidence}")
        if not (math.isfinite(self.threshold) and self.threshold > 0):
            raise DataError(f"threshold must be finite and positive, got {self.threshold}")
        if abs(gamma_cdf(self.gamma, self.threshold) - self.confidence) > 1e-9:
            raise DataError("threshold does not sit at the stated confidence level")
        self.omega_mean.setflags(write=False)


def _compose_rows(
    recipe: Recipe,
    latents: EmbeddingSet | None,
    clip_images: EmbeddingSet | None,
    normal_prompts: EmbeddingSet | None,
    anomalous_prompts: EmbeddingSet | None,
    rows: list[int],
) -> list[np.ndarray]:
    """Compose the working vector for each requested row index."""
    need_v = uses(recipe, TermKind.V)
    need_lang = uses(recipe, TermKind.PI) or uses(recipe, TermKind.PIBAR)
    out = []
    for i in rows:
        v = latents.row(i) if (need_v and latents is not None) else None
        if need_lang:
            feats = language_features(clip_images.row(i), normal_prompts, anomalous_prompts)
        else:
            feats = LanguageFeatures.empty()
        out.append(compose(recipe, v, feats).values)
    return out


def calibrate(
    id_set: EmbeddingSet,
    normal_prompts: EmbeddingSet | None,
    anomalous_prompts: EmbeddingSet | None,
    recipe: Recipe,
    confidence: float,
    fraction: float = 0.5,
    seed: int = 0,
    clip_images: EmbeddingSet | None = None,
    encoder: str = "",
) -> DetectorModel:
    """Build a detector from in-distribution data.

    id_set supplies the latent vectors v. When the recipe uses language
    terms, clip_images supplies the row-aligned CLIP image embeddings; if
    omitted, id_set itself is used (covers pure-language recipes and the
    CLIP-encoder case where v and q coincide).
    """
    if not (0.0 < confidence < 1.0):
        raise ConfigError(f"confidence must be in (0,1), got {confidence}")
    need_lang = uses(recipe, TermKind.PI) or uses(recipe, TermKind.PIBAR)
    if uses(recipe, TermKind.PI) and (normal_prompts is None or normal_prompts.count == 0):
        raise ConfigError("recipe uses 'pi' but no normal prompts were supplied")
    if uses(recipe, TermKind.PIBAR) and (
        anomalous_prompts is None or anomalous_prompts.count == 0
    ):
        raise ConfigError("recipe uses 'pibar' but no anomalous prompts were supplied")
    clip_source = clip_images if clip_images is not None else id_set
    if need_lang and clip_source.count != id_set.count:
        raise AlignmentError(
            f"clip image rows ({clip_source.count}) must align with id rows ({id_set.count})"
        )

    rows_v, rows_f = split_indices(id_set.count, fraction, seed)

    try:
        omegas_v = _compose_rows(
            recipe, id_set, clip_source, normal_prompts, anomalous_prompts, rows_v
        )
        omega_mean = mean_vector(omegas_v)
    except EngineError as exc:
        raise exc.add_context("calibrate (mean vector over Yv)")
    try:
        omegas_f = _compose_rows(
            recipe, id_set, clip_source, normal_prompts, anomalous_prompts, rows_f
        )
        distances = [distance(w, omega_mean) for w in omegas_f]
        fit = fit_gamma(distances)
        threshold = gamma_quantile(fit.params, confidence)
    except EngineError as exc:
        raise exc.add_context("calibrate (distance fit over Yf)")

    return DetectorModel(
        recipe=recipe,
        omega_mean=omega_mean,
        gamma=fit.params,
        confidence=confidence,
        threshold=threshold,
        dim=omega_mean.size,
        provenance=Provenance(seed=seed, n_v=len(rows_v), n_f=len(rows_f), encoder=encoder),
    )


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def model_to_json(model: DetectorModel) -> str:
    mean_text = ",".join(_fmt(x) for x in model.omega_mean)
    prov = model.provenance
    return (
        "{\n"
        f'  "recipe": {json.dumps(render_recipe(model.recipe))},\n'
        f'  "omega_mean": [{mean_text}],\n'
        f'  "gamma": {{"shape": {_fmt(model.gamma.shape)}, "scale": {_fmt(model.gamma.scale)}}},\n'
        f'  "confidence": {_fmt(model.confidence)},\n'
        f'  "threshold": {_fmt(model.threshold)},\n'
        f'  "dim": {model.dim},\n'
        f'  "provenance": {{"seed": {prov.seed}, "n_v": {prov.n_v}, '
        f'"n_f": {prov.n_f}, "encoder": {json.dumps(prov.encoder)}}}\n'
        "}\n"
    )


def save_model(model: DetectorModel, path) -> None:
    Path(path).write_text(model_to_json(model), encoding="utf-8")


def load_model(path) -> DetectorModel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        prov = doc["provenance"]
        return DetectorModel(
            recipe=parse_recipe(doc["recipe"]),
            omega_mean=np.asarray(doc["omega_mean"], dtype=np.float64),
            gamma=GammaParams(float(doc["gamma"]["shape"]), float(doc["gamma"]["scale"])),
            confidence=float(doc["confidence"]),
            threshold=float(doc["threshold"]),
            dim=int(doc["dim"]),
            provenance=Provenance(
                seed=int(prov["seed"]),
                n_v=int(prov["n_v"]),
                n_f=int(prov["n_f"]),
                encoder=str(prov.get("encoder", "")),
            ),
        )
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: not a valid model file: {exc}") from exc
    except EngineError as exc:
        raise FormatError(f"{path}: not a valid model file: {exc.message}") from exc
