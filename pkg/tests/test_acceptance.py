"""Acceptance suite: one test per release criterion, at the stated tolerance.

Run with ``pytest -v tests/test_acceptance.py`` for the per-criterion
pass/fail lines (add -s to see the [PASS] markers as they complete).
"""

import math
import random

import numpy as np

from ood_sentinel.calibration import calibrate, distance, split_indices
from ood_sentinel.cli import main
from ood_sentinel.embedding_io import EmbeddingSet, write_embedding_file
from ood_sentinel.evaluation import aggregate_row, build_test_mix, confusion, f1
from ood_sentinel.detection import batch_detect
from ood_sentinel.gamma import GammaParams, fit_gamma, gamma_cdf, gamma_quantile
from ood_sentinel.recipe import (
    Add,
    Append,
    Term,
    TermKind,
    parse_recipe,
    recipe_dimension,
    render_recipe,
)
from ood_sentinel.representation import LanguageFeatures, compose, cosine_similarity

SELFORACLE_F1 = [88.03, 88.68, 60.06, 88.84, 60.56, 89.08, 59.81, 81.77, 59.88, 60.07]


def done(name):
    print(f"[PASS] {name}")


def test_table_statistics_oracle():
    mean, std = aggregate_row(SELFORACLE_F1)
    assert math.floor(mean * 100) / 100 == 73.67
    assert math.floor(std * 100) / 100 == 13.74
    done("table-statistics oracle: mean 73.67, population std 13.74")


def test_gamma_fit_recovery():
    draws = np.random.default_rng(20240214).gamma(shape=2.0, scale=3.0, size=10_000)
    fit = fit_gamma(draws)
    assert 1.90 <= fit.params.shape <= 2.10
    assert abs(fit.params.mean - 6.0) / 6.0 <= 0.02
    done("gamma fit recovery: k in [1.90, 2.10], mean within 2% of 6")


def test_quantile_round_trip_1000_random():
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(1000):
        params = GammaParams(rng.uniform(0.1, 50.0), rng.uniform(0.01, 100.0))
        p = rng.uniform(0.001, 0.999)
        worst = max(worst, abs(gamma_cdf(params, gamma_quantile(params, p)) - p))
    assert worst <= 1e-9
    done(f"quantile round-trip: worst |F(q)-p| = {worst:.2e} <= 1e-9")


def test_exponential_special_case():
    assert abs(gamma_quantile(GammaParams(1.0, 1.0), 0.9) - math.log(10)) <= 1e-9
    done("exponential special case: quantile(0.9) = ln 10 within 1e-9")


def _cluster(center, spread, count, dim, rng):
    c = np.zeros(dim)
    c[: len(center)] = center
    return c + spread * rng.standard_normal((count, dim))


def test_threshold_coverage():
    rng = np.random.default_rng(7)
    rows = _cluster([4.0], 0.5, 2000, 32, rng)
    data = EmbeddingSet.from_array(rows)
    model = calibrate(data, None, None, parse_recipe("v"), 0.9, 0.5, 42)
    _, rows_f = split_indices(data.count, 0.5, 42)
    inside = sum(
        distance(data.row(i), model.omega_mean) <= model.threshold for i in rows_f
    )
    coverage = inside / len(rows_f)
    assert 0.87 <= coverage <= 0.93
    done(f"threshold coverage at phi=0.9: {coverage:.4f} in [0.87, 0.93]")


def test_end_to_end_separation_60_degrees():
    rng = np.random.default_rng(60)
    dim = 32
    angle = math.radians(60.0)
    id_train = EmbeddingSet.from_array(_cluster([4.0], 0.3, 2000, dim, rng))
    id_test = EmbeddingSet.from_array(_cluster([4.0], 0.3, 500, dim, rng))
    ood = EmbeddingSet.from_array(
        _cluster([4.0 * math.cos(angle), 4.0 * math.sin(angle)], 0.3, 500, dim, rng)
    )
    # phi = 0.95: the threshold flags ~5% of iD by construction, so the F1
    # ceiling on a perfect separation is ~0.976
    model = calibrate(id_train, None, None, parse_recipe("v"), 0.95, 0.5, 0)
    mixed, labels = build_test_mix(id_test, ood, 0)
    results = batch_detect(model, latents=mixed)
    score = f1(confusion(labels, [r.verdict for r in results]))
    assert score >= 0.95
    done(f"end-to-end separation at 60 degrees: F1 = {score:.4f} >= 0.95")


def _random_recipe(rng: random.Random):
    def term():
        kind = rng.choice(list(TermKind))
        return Term(kind, rng.randint(1, 9))

    def add():
        return Add(tuple(term() for _ in range(rng.randint(2, 4))))

    shape = rng.random()
    if shape < 0.4:
        return term()
    if shape < 0.6:
        return add()
    children = tuple(
        (term() if rng.random() < 0.6 else add()) for _ in range(rng.randint(2, 4))
    )
    return Append(children)


def test_recipe_parser_round_trip_10000_asts():
    rng = random.Random(1234)
    for _ in range(10_000):
        recipe = _random_recipe(rng)
        assert parse_recipe(render_recipe(recipe)) == recipe
    assert parse_recipe("(pi,3v)") == Append((Term(TermKind.PI, 1), Term(TermKind.V, 3)))
    assert parse_recipe("2pibar") == Term(TermKind.PIBAR, 2)
    assert parse_recipe("2pi+v") == Add((Term(TermKind.PI, 2), Term(TermKind.V, 1)))
    assert parse_recipe("(2pi,2pibar)") == Append(
        (Term(TermKind.PI, 2), Term(TermKind.PIBAR, 2))
    )
    done("recipe parser: 10,000 AST round-trips plus the four table notations")


def test_compose_dimension_agreement_10000_pairs():
    rng = random.Random(4321)
    np_rng = np.random.default_rng(4321)
    for _ in range(10_000):
        recipe = _random_recipe(rng)
        dim_v = rng.randint(1, 8)
        n_pi = rng.randint(1, 8)
        n_pibar = rng.randint(1, 8)
        feats = LanguageFeatures(
            np_rng.uniform(-1, 1, n_pi), np_rng.uniform(-1, 1, n_pibar)
        )
        omega = compose(recipe, np_rng.standard_normal(dim_v), feats)
        assert omega.values.size == recipe_dimension(recipe, dim_v, n_pi, n_pibar)
    done("compose/recipe_dimension agreement on 10,000 random pairs")


def test_calibrate_determinism_byte_identical(tmp_path):
    rng = np.random.default_rng(5)
    id_path = tmp_path / "id.emb"
    write_embedding_file(EmbeddingSet.from_array(_cluster([4.0], 0.4, 600, 8, rng)), id_path)
    flags = ["calibrate", "--id", str(id_path), "--recipe", "v",
             "--confidence", "0.9", "--seed", "42"]
    assert main(flags + ["--out", str(tmp_path / "m1.json")]) == 0
    assert main(flags + ["--out", str(tmp_path / "m2.json")]) == 0
    assert (tmp_path / "m1.json").read_bytes() == (tmp_path / "m2.json").read_bytes()
    done("calibrate determinism: byte-identical model files")


def test_cosine_invariant_suite():
    rng = np.random.default_rng(31)
    for _ in range(500):
        x = rng.standard_normal(rng.integers(1, 16))
        while np.linalg.norm(x) == 0:
            x = rng.standard_normal(8)
        c = float(rng.uniform(1e-6, 1e6))
        assert abs(cosine_similarity(x, c * x) - 1.0) <= 1e-12
        assert abs(cosine_similarity(x, x) - 1.0) <= 1e-12
        assert abs(cosine_similarity(x, -x) + 1.0) <= 1e-12
    done("cosine invariants: scale/self/antiparallel within 1e-12")
