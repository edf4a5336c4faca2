"""Score and classify embeddings against a calibrated detector."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

from .calibration import DetectorModel, distance
from .embedding_io import EmbeddingSet
from .errors import AlignmentError, ConfigError, DimensionError
from .recipe import TermKind, uses
from .representation import LanguageFeatures, compose, language_features

Verdict = Literal["normal", "ood"]


@dataclass(frozen=True)
class DetectionResult:
    index: int
    epsilon: float
    threshold: float
    verdict: Verdict


def score(model: DetectorModel, v, feats: LanguageFeatures | None) -> float:
    omega = compose(model.recipe, v, feats)
    if omega.values.size != model.dim:
        raise DimensionError(
            f"composed vector length {omega.values.size} != model dim {model.dim}"
        )
    return distance(omega.values, model.omega_mean)


def classify(model: DetectorModel, epsilon: float) -> Verdict:
    """ood strictly above the threshold; a tie counts as normal."""
    return "ood" if epsilon > model.threshold else "normal"


def batch_detect(
    model: DetectorModel,
    latents: EmbeddingSet | None = None,
    clip_images: EmbeddingSet | None = None,
    normal_prompts: EmbeddingSet | None = None,
    anomalous_prompts: EmbeddingSet | None = None,
) -> list[DetectionResult]:
    """Score every row; results are in input order, row i from row i of each set.

    latents carry v, clip_images carry the CLIP image embeddings for the
    language terms (falling back to latents when omitted, mirroring
    calibrate).
    """
    need_v = uses(model.recipe, TermKind.V)
    need_lang = uses(model.recipe, TermKind.PI) or uses(model.recipe, TermKind.PIBAR)
    if need_v and latents is None:
        raise ConfigError("model recipe uses 'v' but no latents were supplied")
    clip_source = clip_images if clip_images is not None else latents
    if need_lang and clip_source is None:
        raise ConfigError("model recipe uses language terms but no clip images were supplied")
    if need_v and need_lang and latents.count != clip_source.count:
        raise AlignmentError(
            f"latent rows ({latents.count}) must align with clip image rows "
            f"({clip_source.count})"
        )

    count = latents.count if need_v else clip_source.count
    results = []
    for i in range(count):
        v = latents.row(i) if need_v else None
        if need_lang:
            feats = language_features(clip_source.row(i), normal_prompts, anomalous_prompts)
        else:
            feats = LanguageFeatures.empty()
        eps = score(model, v, feats)
        results.append(DetectionResult(i, eps, model.threshold, classify(model, eps)))
    return results


def detection_csv(results: list[DetectionResult]) -> str:
    """CSV per the CLI interface; epsilon at 9 significant digits."""
    lines = ["index,epsilon,threshold,verdict"]
    for r in results:
        lines.append(f"{r.index},{r.epsilon:.9g},{r.threshold:.9g},{r.verdict}")
    return "\n".join(lines) + "\n"
