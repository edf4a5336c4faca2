"""Language-similarity features and recipe-driven vector composition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedding_io import EmbeddingSet
from .errors import ConfigError, DataError, DegenerateVectorError, DimensionError
from .recipe import Add, Append, Recipe, Term, TermKind, recipe_dimension

_SIM_TOL = 1e-9


@dataclass(frozen=True)
class LanguageFeatures:
    """Cosine similarities of one image embedding to each prompt embedding."""

    pi: np.ndarray
    pibar: np.ndarray

    def __post_init__(self):
        for name, arr in (("pi", self.pi), ("pibar", self.pibar)):
            if arr.ndim != 1:
                raise DataError(f"{name} must be a flat vector")

    @classmethod
    def build(cls, pi, pibar) -> "LanguageFeatures":
        """Validating constructor: entries must be cosine values up to float
        rounding (within 1e-9 of [-1, 1]) and are clamped back into range."""
        out = []
        for name, arr in (("pi", pi), ("pibar", pibar)):
            arr = np.asarray(arr, dtype=np.float64)
            if arr.size and (np.abs(arr) > 1.0 + _SIM_TOL).any():
                raise DataError(f"{name} has entries outside [-1, 1]")
            out.append(np.clip(arr, -1.0, 1.0))
        return cls(out[0], out[1])

    @classmethod
    def empty(cls) -> "LanguageFeatures":
        return cls.build(np.zeros(0), np.zeros(0))


@dataclass(frozen=True)
class OmegaVector:
    values: np.ndarray
    recipe: Recipe


def cosine_similarity(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1:
        raise DimensionError("cosine similarity needs flat vectors")
    if a.size != b.size:
        raise DimensionError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise DimensionError("cosine similarity needs at least one component")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DegenerateVectorError("cosine similarity of a zero-norm vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def _similarities(q: np.ndarray, prompts: EmbeddingSet | None) -> np.ndarray:
    if prompts is None or prompts.count == 0:
        return np.zeros(0)
    mat = prompts.rows64()
    if mat.shape[1] != q.size:
        raise DimensionError(
            f"prompt dim {mat.shape[1]} does not match image embedding dim {q.size}"
        )
    norms = np.linalg.norm(mat, axis=1)
    if (norms == 0.0).any():
        raise DegenerateVectorError("prompt set contains a zero-norm embedding")
    nq = np.linalg.norm(q)
    if nq == 0.0:
        raise DegenerateVectorError("zero-norm image embedding")
    return mat @ q / (norms * nq)


def language_features(
    image_embedding,
    normal_prompts: EmbeddingSet | None,
    anomalous_prompts: EmbeddingSet | None,
) -> LanguageFeatures:
    """pi[j] = cos(q, normal_prompts[j]); pibar likewise over anomalous prompts."""
    q = np.asarray(image_embedding, dtype=np.float64)
    if q.ndim != 1:
        raise DimensionError("image embedding must be a flat vector")
    return LanguageFeatures.build(
        _similarities(q, normal_prompts), _similarities(q, anomalous_prompts)
    )


def compose(recipe: Recipe, v, feats: LanguageFeatures | None) -> OmegaVector:
    """Build the working vector: repeat terms, concatenate appends, sum adds.

    Add children of different lengths are cyclically tiled up to the longest
    child before the elementwise sum, so ``pi+v`` is total whatever the
    prompt count.
    """
    if feats is None:
        feats = LanguageFeatures.empty()
    v_arr = None if v is None else np.asarray(v, dtype=np.float64)

    def base(kind: TermKind) -> np.ndarray:
        if kind is TermKind.V:
            if v_arr is None or v_arr.size == 0:
                raise ConfigError("recipe uses 'v' but no latent vector was supplied")
            return v_arr
        if kind is TermKind.PI:
            if feats.pi.size == 0:
                raise ConfigError("recipe uses 'pi' but no normal prompts were supplied")
            return feats.pi
        if feats.pibar.size == 0:
            raise ConfigError("recipe uses 'pibar' but no anomalous prompts were supplied")
        return feats.pibar

    def term_vec(t: Term) -> np.ndarray:
        b = base(t.kind)
        return np.tile(b, t.factor) if t.factor > 1 else b

    def node_vec(node: Recipe) -> np.ndarray:
        if isinstance(node, Term):
            return term_vec(node)
        if isinstance(node, Add):
            parts = [term_vec(c) for c in node.children]
            longest = max(p.size for p in parts)
            return sum(np.resize(p, longest) for p in parts)
        return np.concatenate([node_vec(c) for c in node.children])

    values = np.asarray(node_vec(recipe), dtype=np.float64)
    if not np.isfinite(values).all():
        raise DataError("composed vector contains NaN or Inf entries")
    expected = recipe_dimension(
        recipe,
        0 if v_arr is None else v_arr.size,
        feats.pi.size,
        feats.pibar.size,
    )
    if values.size != expected:
        raise DimensionError(
            f"composed length {values.size} != recipe dimension {expected}"
        )
    return OmegaVector(values, recipe)
