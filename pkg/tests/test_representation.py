import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import nonzero_vector, recipe_strategy
from ood_sentinel.embedding_io import EmbeddingSet
from ood_sentinel.errors import ConfigError, DataError, DegenerateVectorError, DimensionError
from ood_sentinel.recipe import TermKind, recipe_dimension, terms
from ood_sentinel.representation import (
    LanguageFeatures,
    compose,
    cosine_similarity,
    language_features,
)


def test_cosine_examples():
    assert cosine_similarity([1, 0], [0, 1]) == 0.0
    assert cosine_similarity([1, 2], [2, 4]) == pytest.approx(1.0, abs=1e-12)
    assert cosine_similarity([1, 0], [-1, 0]) == pytest.approx(-1.0, abs=1e-12)


def test_cosine_errors():
    with pytest.raises(DegenerateVectorError):
        cosine_similarity([0, 0], [1, 0])
    with pytest.raises(DimensionError):
        cosine_similarity([1, 0], [1, 0, 0])


@given(nonzero_vector(), st.floats(1e-6, 1e6))
def test_cosine_scale_invariance(x, c):
    assert abs(cosine_similarity(x, c * x) - 1.0) <= 1e-12


@given(nonzero_vector())
def test_cosine_antiparallel(x):
    assert abs(cosine_similarity(x, -x) + 1.0) <= 1e-12


def test_language_features_unit_axes():
    normals = EmbeddingSet.from_array([[1, 0], [0, 1]])
    feats = language_features([1, 0], normals, None)
    assert np.allclose(feats.pi, [1, 0])
    assert feats.pibar.size == 0


def test_language_features_parallel():
    feats = language_features([1, 1], EmbeddingSet.from_array([[1, 1]]), None)
    assert feats.pi == pytest.approx([1.0])


def test_language_features_matches_scalar_oracle():
    rng = np.random.default_rng(11)
    q = rng.standard_normal(12)
    normals = EmbeddingSet.from_array(rng.standard_normal((5, 12)))
    anoms = EmbeddingSet.from_array(rng.standard_normal((3, 12)))
    feats = language_features(q, normals, anoms)
    for j in range(5):
        assert feats.pi[j] == pytest.approx(cosine_similarity(q, normals.row(j)), abs=1e-12)
    for j in range(3):
        assert feats.pibar[j] == pytest.approx(cosine_similarity(q, anoms.row(j)), abs=1e-12)


def test_language_features_prompt_order_permutes_pi():
    rng = np.random.default_rng(3)
    q = rng.standard_normal(6)
    prompts = rng.standard_normal((4, 6))
    perm = [2, 0, 3, 1]
    direct = language_features(q, EmbeddingSet.from_array(prompts), None).pi
    shuffled = language_features(q, EmbeddingSet.from_array(prompts[perm]), None).pi
    assert np.allclose(shuffled, direct[perm])


def test_language_features_dim_mismatch():
    with pytest.raises(DimensionError):
        language_features([1, 0, 0], EmbeddingSet.from_array([[1, 0]]), None)


def test_language_features_zero_norm_prompt():
    with pytest.raises(DegenerateVectorError):
        language_features([1, 0], EmbeddingSet.from_array([[0, 0]]), None)


def test_build_rejects_non_cosine_values():
    with pytest.raises(DataError):
        LanguageFeatures.build([1.5], [])


def feats(pi=(), pibar=()):
    return LanguageFeatures(np.asarray(pi, dtype=float), np.asarray(pibar, dtype=float))


def test_compose_append():
    out = compose_values("(pi,2v)", v=[1, 2], pi=[3])
    assert np.array_equal(out, [3, 1, 2, 1, 2])


def test_compose_add_tiles_cyclically():
    assert np.array_equal(compose_values("pi+v", v=[1, 2], pi=[3]), [4, 5])
    # tiling wraps: pi of length 2 against v of length 3
    assert np.array_equal(compose_values("pi+v", v=[1, 1, 1], pi=[5, 7]), [6, 8, 6])


def test_compose_repetition():
    assert np.array_equal(compose_values("2pibar", pibar=[0.5, -0.5]), [0.5, -0.5, 0.5, -0.5])


def test_compose_mixed_description():
    assert np.array_equal(compose_values("(2pi,2pibar)", pi=[0.25], pibar=[0.75]),
                          [0.25, 0.25, 0.75, 0.75])


def compose_values(text, v=None, pi=(), pibar=()):
    from ood_sentinel.recipe import parse_recipe

    return compose(parse_recipe(text), v, feats(pi, pibar)).values


def test_compose_missing_inputs():
    with pytest.raises(ConfigError, match="'v'"):
        compose_values("v")
    with pytest.raises(ConfigError, match="'pi'"):
        compose_values("pi", v=[1.0])
    with pytest.raises(ConfigError, match="'pibar'"):
        compose_values("pibar", v=[1.0])


@settings(max_examples=150)
@given(recipe_strategy, st.integers(1, 6), st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**31))
def test_compose_length_matches_recipe_dimension(recipe, dim_v, n_pi, n_pibar, seed):
    rng = np.random.default_rng(seed)
    f = feats(rng.uniform(-1, 1, n_pi), rng.uniform(-1, 1, n_pibar))
    out = compose(recipe, rng.standard_normal(dim_v), f)
    assert out.values.size == recipe_dimension(recipe, dim_v, n_pi, n_pibar)


def test_compose_deterministic():
    rng = np.random.default_rng(5)
    v = rng.standard_normal(4)
    f = feats(rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 2))
    from ood_sentinel.recipe import parse_recipe

    r = parse_recipe("(pi+v,2pibar,3v)")
    assert terms(r) is not None  # recipe touches every kind
    a = compose(r, v, f).values
    b = compose(r, v, f).values
    assert np.array_equal(a, b)
    assert {t.kind for t in terms(r)} == set(TermKind)
