import numpy as np
import pytest

from ood_sentinel.cli import main
from ood_sentinel.embedding_io import (
    DatasetManifest,
    EmbeddingSet,
    ManifestEntry,
    PromptFiles,
    write_embedding_file,
    write_manifest,
)


def write_cluster(path, count=400, dim=8, seed=0, angle=0.0):
    rng = np.random.default_rng(seed)
    center = np.zeros(dim)
    center[0] = 4.0 * np.cos(angle)
    center[1] = 4.0 * np.sin(angle)
    rows = center + 0.3 * rng.standard_normal((count, dim))
    write_embedding_file(EmbeddingSet.from_array(rows), path)
    return rows


@pytest.fixture
def id_file(tmp_path):
    path = tmp_path / "id.emb"
    write_cluster(path)
    return path


def test_calibrate_happy_path(tmp_path, id_file, capsys):
    out = tmp_path / "m.json"
    code = main(
        ["calibrate", "--id", str(id_file), "--recipe", "v",
         "--confidence", "0.9", "--seed", "42", "--out", str(out)]
    )
    assert code == 0
    assert out.exists()
    summary = capsys.readouterr().out
    assert "dim=8" in summary and "threshold=" in summary and "gamma_shape=" in summary


def test_calibrate_rejects_bad_confidence(tmp_path, id_file, capsys):
    code = main(
        ["calibrate", "--id", str(id_file), "--recipe", "v",
         "--confidence", "1.5", "--out", str(tmp_path / "m.json")]
    )
    assert code == 2
    assert "confidence" in capsys.readouterr().err


def test_calibrate_language_recipe_needs_prompts(tmp_path, id_file, capsys):
    code = main(
        ["calibrate", "--id", str(id_file), "--recipe", "(pi,v)",
         "--out", str(tmp_path / "m.json")]
    )
    assert code == 2
    assert "pi" in capsys.readouterr().err


def test_calibrate_deterministic_bytes(tmp_path, id_file):
    args = ["calibrate", "--id", str(id_file), "--recipe", "v", "--seed", "7"]
    assert main(args + ["--out", str(tmp_path / "a.json")]) == 0
    assert main(args + ["--out", str(tmp_path / "b.json")]) == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_calibrate_missing_input_file(tmp_path, capsys):
    code = main(
        ["calibrate", "--id", str(tmp_path / "nope.emb"), "--recipe", "v",
         "--out", str(tmp_path / "m.json")]
    )
    assert code == 2


def test_calibrate_rejects_malformed_emb(tmp_path, capsys):
    bad = tmp_path / "bad.emb"
    bad.write_bytes(b"JUNKJUNKJUNKJUNKJUNK")
    code = main(["calibrate", "--id", str(bad), "--recipe", "v", "--out", str(tmp_path / "m.json")])
    assert code == 3


def calibrated_model(tmp_path, id_file):
    out = tmp_path / "model.json"
    assert main(
        ["calibrate", "--id", str(id_file), "--recipe", "v", "--seed", "42",
         "--out", str(out)]
    ) == 0
    return out


def test_detect_mostly_normal_on_calibration_data(tmp_path, id_file, capsys):
    model = calibrated_model(tmp_path, id_file)
    capsys.readouterr()
    code = main(["detect", "--model", str(model), "--latents", str(id_file)])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "index,epsilon,threshold,verdict"
    verdicts = [line.split(",")[3] for line in lines[1:]]
    assert len(verdicts) == 400
    assert verdicts.count("normal") / len(verdicts) >= 0.88  # ~90% at phi=0.9


def test_detect_empty_input(tmp_path, id_file, capsys):
    model = calibrated_model(tmp_path, id_file)
    empty = tmp_path / "empty.emb"
    write_embedding_file(EmbeddingSet.from_array(np.zeros((0, 8))), empty)
    capsys.readouterr()
    code = main(["detect", "--model", str(model), "--latents", str(empty)])
    assert code == 0
    assert capsys.readouterr().out == "index,epsilon,threshold,verdict\n"


def test_detect_corrupt_model(tmp_path, id_file, capsys):
    bad = tmp_path / "model.json"
    bad.write_text("{definitely not json")
    code = main(["detect", "--model", str(bad), "--latents", str(id_file)])
    assert code == 3


def test_detect_writes_file(tmp_path, id_file):
    model = calibrated_model(tmp_path, id_file)
    out = tmp_path / "dets.csv"
    assert main(["detect", "--model", str(model), "--latents", str(id_file),
                 "--out", str(out)]) == 0
    assert out.read_text().startswith("index,epsilon,threshold,verdict")


def eval_fixture(tmp_path):
    id_path = tmp_path / "id.emb"
    write_cluster(id_path, seed=1)
    entries = [ManifestEntry("id.emb", "id", "", "enc")]
    for i, ood_type in enumerate(["rain", "fog", "night"]):
        name = f"{ood_type}.emb"
        write_cluster(tmp_path / name, count=150, seed=10 + i, angle=1.2)
        entries.append(ManifestEntry(name, "ood", ood_type, "enc"))
    manifest_path = tmp_path / "manifest.json"
    write_manifest(DatasetManifest(tuple(entries), PromptFiles()), manifest_path)
    model = tmp_path / "model.json"
    assert main(
        ["calibrate", "--id", str(id_path), "--recipe", "v", "--seed", "3",
         "--encoder", "enc", "--out", str(model)]
    ) == 0
    return manifest_path, model


def test_eval_writes_three_reports(tmp_path, capsys):
    manifest, model = eval_fixture(tmp_path)
    code = main(
        ["eval", "--manifest", str(manifest), "--models", str(model),
         "--out", str(tmp_path / "report")]
    )
    assert code == 0
    for metric in ("f1", "accuracy", "fpr"):
        assert (tmp_path / f"report.{metric}.csv").exists()


def test_eval_single_metric_single_file(tmp_path):
    manifest, model = eval_fixture(tmp_path)
    code = main(
        ["eval", "--manifest", str(manifest), "--models", str(model),
         "--metric", "f1", "--format", "markdown", "--out", str(tmp_path / "r")]
    )
    assert code == 0
    assert (tmp_path / "r.f1.md").exists()
    assert not (tmp_path / "r.accuracy.md").exists()


def test_eval_to_stdout(tmp_path, capsys):
    manifest, model = eval_fixture(tmp_path)
    capsys.readouterr()
    assert main(["eval", "--manifest", str(manifest), "--models", str(model),
                 "--metric", "f1"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# metric: f1")
    # columns follow the canonical corruption order, not manifest order
    assert "label,rain,night,fog,mean,std" in out


def test_eval_single_pair_mode(tmp_path, capsys):
    id_path = tmp_path / "idset.emb"
    write_cluster(id_path, seed=2)
    ood_path = tmp_path / "fog.emb"
    write_cluster(ood_path, count=150, seed=20, angle=1.2)
    model = tmp_path / "model.json"
    assert main(
        ["calibrate", "--id", str(id_path), "--recipe", "v", "--seed", "1",
         "--out", str(model)]
    ) == 0
    capsys.readouterr()
    assert main(["eval", "--id", str(id_path), "--ood", str(ood_path),
                 "--models", str(model), "--metric", "f1"]) == 0
    out = capsys.readouterr().out
    assert "label,fog,mean,std" in out


def test_eval_requires_inputs(tmp_path, capsys):
    model = tmp_path / "m.json"
    assert main(["eval", "--models", str(model)]) == 2
    assert "--manifest" in capsys.readouterr().err


def test_recipe_normalization(capsys):
    assert main(["recipe", "(PI, 3 v)"]) == 0
    assert capsys.readouterr().out == "(pi,3v)\n"


def test_recipe_dimension_echo(capsys):
    assert main(["recipe", "(pi,3v)", "--dim-v", "8", "--n-pi", "4"]) == 0
    assert capsys.readouterr().out == "(pi,3v)\n28\n"


def test_recipe_parse_error_with_caret(capsys):
    assert main(["recipe", "pi++v"]) == 2
    err = capsys.readouterr().err
    assert "error:" in err
    caret_line = err.splitlines()[-1]
    assert caret_line.strip() == "^"
    assert caret_line.index("^") == 2 + 3  # two-space indent + position 3


def test_usage_error_unknown_flag():
    assert main(["calibrate", "--bogus"]) == 2


def test_usage_error_no_command():
    assert main([]) == 2
