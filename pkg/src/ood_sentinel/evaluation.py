"""Labeled test mixes, detection metrics, and per-corruption report tables."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass

import numpy as np

from .calibration import DetectorModel
from .detection import batch_detect
from .embedding_io import DatasetManifest, EmbeddingSet, read_embedding_file
from .errors import (
    AlignmentError,
    ConfigError,
    DataError,
    DimensionError,
    FormatError,
    InsufficientDataError,
    UndefinedMetricError,
)
from .recipe import TermKind, render_recipe, uses
from .rng import SplitMix64, fnv1a64, shuffled_indices

logger = logging.getLogger(__name__)

# Column order of the corruption axis in rendered reports.
OOD_TYPE_ORDER = (
    "rain", "snow", "night", "bright", "fog",
    "contrast", "defocus", "gauss", "glass", "motion",
)

METRICS = ("f1", "accuracy", "fpr")

CLIP_IMAGE_ENCODER = "clip-image"


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with ood as the positive class."""

    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise DataError("confusion counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def mix_indices(n_id: int, n_ood: int, seed: int) -> tuple[list[tuple[str, int]], list[str]]:
    """Pick min(n_id, n_ood) rows from each side and interleave id, ood, id, ...

    Subsampling is without replacement via two seeded shuffles whose seeds
    are drawn from splitmix64(seed), so a seed pins the whole mix.
    """
    if n_id < 1 or n_ood < 1:
        raise InsufficientDataError("test mix needs at least one row per class")
    m = min(n_id, n_ood)
    rng = SplitMix64(seed)
    id_rows = shuffled_indices(n_id, rng.next_u64())[:m]
    ood_rows = shuffled_indices(n_ood, rng.next_u64())[:m]
    sources: list[tuple[str, int]] = []
    labels: list[str] = []
    for i_row, o_row in zip(id_rows, ood_rows):
        sources.append(("id", i_row))
        labels.append("id")
        sources.append(("ood", o_row))
        labels.append("ood")
    return sources, labels


def build_test_mix(
    id_set: EmbeddingSet, ood_set: EmbeddingSet, seed: int
) -> tuple[EmbeddingSet, list[str]]:
    """1:1 labeled mix of in- and out-of-distribution rows."""
    if id_set.dim != ood_set.dim:
        raise DimensionError(f"mix dims differ: {id_set.dim} vs {ood_set.dim}")
    sources, labels = mix_indices(id_set.count, ood_set.count, seed)
    rows = np.stack(
        [
            (id_set.vectors[row] if which == "id" else ood_set.vectors[row])
            for which, row in sources
        ]
    )
    return EmbeddingSet(rows, id_set.meta), labels


_LABELS = ("id", "ood")
_VERDICTS = ("normal", "ood")


def confusion(labels: list[str], verdicts: list[str]) -> ConfusionMatrix:
    if len(labels) != len(verdicts):
        raise AlignmentError(f"{len(labels)} labels vs {len(verdicts)} verdicts")
    tp = fp = tn = fn = 0
    for label, verdict in zip(labels, verdicts):
        if label not in _LABELS:
            raise DataError(f"unknown label {label!r}")
        if verdict not in _VERDICTS:
            raise DataError(f"unknown verdict {verdict!r}")
        if label == "ood":
            if verdict == "ood":
                tp += 1
            else:
                fn += 1
        else:
            if verdict == "ood":
                fp += 1
            else:
                tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)


def f1(c: ConfusionMatrix) -> float:
    denom = 2 * c.tp + c.fp + c.fn
    if denom == 0:
        raise UndefinedMetricError("F1 undefined: no positives anywhere")
    return 2 * c.tp / denom


def accuracy(c: ConfusionMatrix) -> float:
    if c.total == 0:
        raise UndefinedMetricError("accuracy undefined on an empty sample")
    return (c.tp + c.tn) / c.total


def fpr(c: ConfusionMatrix) -> float:
    denom = c.fp + c.tn
    if denom == 0:
        raise UndefinedMetricError("FPR undefined: no negatives")
    return c.fp / denom


_METRIC_FNS = {"f1": f1, "accuracy": accuracy, "fpr": fpr}


def aggregate_row(values) -> tuple[float, float]:
    """Arithmetic mean and population standard deviation (divide by N)."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise InsufficientDataError("cannot aggregate an empty row")
    return float(arr.mean()), float(arr.std())


@dataclass(frozen=True)
class ReportRow:
    label: str
    per_type: dict[str, float | None]
    mean: float | None
    std: float | None


@dataclass(frozen=True)
class EvaluationReport:
    metric: str
    ood_types: tuple[str, ...]
    rows: tuple[ReportRow, ...]


def canonical_type_order(types) -> tuple[str, ...]:
    """Known corruption columns in table order, unknown ones sorted after."""
    present = set(types)
    known = [t for t in OOD_TYPE_ORDER if t in present]
    extra = sorted(present - set(OOD_TYPE_ORDER))
    return tuple(known + extra)


def model_label(model: DetectorModel) -> str:
    recipe_text = render_recipe(model.recipe)
    encoder = model.provenance.encoder
    return f"{encoder}:{recipe_text}" if encoder else recipe_text


def evaluate_pair(
    model: DetectorModel,
    id_latents: EmbeddingSet | None,
    ood_latents: EmbeddingSet | None,
    id_clips: EmbeddingSet | None,
    ood_clips: EmbeddingSet | None,
    normal_prompts: EmbeddingSet | None,
    anomalous_prompts: EmbeddingSet | None,
    seed: int,
) -> ConfusionMatrix:
    """Detect on a 1:1 id/ood mix and tally the confusion counts.

    Latent and clip sets are row-aligned per side; the mix picks the same
    row indices from both so v and q keep describing the same image.
    """
    need_v = uses(model.recipe, TermKind.V)
    need_lang = uses(model.recipe, TermKind.PI) or uses(model.recipe, TermKind.PIBAR)

    def side_count(latents, clips, side):
        counts = set()
        if need_v:
            if latents is None:
                raise ConfigError(f"{side}: model recipe needs latent embeddings")
            counts.add(latents.count)
        if need_lang:
            if clips is None:
                raise ConfigError(f"{side}: model recipe needs clip-image embeddings")
            counts.add(clips.count)
        if len(counts) > 1:
            raise AlignmentError(f"{side}: latent and clip row counts differ: {counts}")
        return counts.pop()

    n_id = side_count(id_latents, id_clips, "id side")
    n_ood = side_count(ood_latents, ood_clips, "ood side")
    sources, labels = mix_indices(n_id, n_ood, seed)

    def gather(id_side, ood_side):
        if id_side is None or ood_side is None:
            return None
        rows = np.stack(
            [
                (id_side.vectors[row] if which == "id" else ood_side.vectors[row])
                for which, row in sources
            ]
        )
        return EmbeddingSet(rows, id_side.meta)

    mixed_latents = gather(id_latents, ood_latents) if need_v else None
    mixed_clips = gather(id_clips, ood_clips) if need_lang else None
    results = batch_detect(
        model,
        latents=mixed_latents,
        clip_images=mixed_clips,
        normal_prompts=normal_prompts,
        anomalous_prompts=anomalous_prompts,
    )
    return confusion(labels, [r.verdict for r in results])


class _ManifestSets:
    """Lazy loader joining manifest entries by (role, ood_type, encoder)."""

    def __init__(self, manifest: DatasetManifest):
        self.manifest = manifest
        self._cache: dict[str, EmbeddingSet] = {}

    def _load(self, rel_path: str) -> EmbeddingSet:
        if rel_path not in self._cache:
            self._cache[rel_path] = read_embedding_file(self.manifest.resolve(rel_path))
        return self._cache[rel_path]

    def find(self, role: str, ood_type: str, encoder: str) -> EmbeddingSet | None:
        paths = [
            e.path
            for e in self.manifest.entries
            if e.role == role and e.ood_type == ood_type and e.encoder == encoder
        ]
        if not paths:
            return None
        sets = [self._load(p) for p in paths]
        if len(sets) == 1:
            return sets[0]
        if len({s.dim for s in sets}) > 1:
            raise DimensionError(f"entries for {role}/{ood_type}/{encoder} mix dims")
        return EmbeddingSet(np.vstack([s.vectors for s in sets]), sets[0].meta)

    def prompts(self) -> tuple[EmbeddingSet | None, EmbeddingSet | None]:
        files = self.manifest.prompt_files
        normal = self._load(files.normal) if files.normal else None
        anomalous = self._load(files.anomalous) if files.anomalous else None
        return normal, anomalous

    def ood_types(self) -> tuple[str, ...]:
        return canonical_type_order(
            {e.ood_type for e in self.manifest.entries if e.role == "ood"}
        )


def evaluate_grid(
    manifest: DatasetManifest, models: list[DetectorModel], seed: int = 0
) -> dict[str, EvaluationReport]:
    """One report per metric: rows are models, columns are corruption types.

    A cell whose embedding files are missing from the manifest is left
    absent (warned, excluded from the row mean/std), as is a cell whose
    metric is undefined.
    """
    sets = _ManifestSets(manifest)
    ood_types = sets.ood_types()
    normal_prompts, anomalous_prompts = sets.prompts()

    grid: dict[str, list[ReportRow]] = {m: [] for m in METRICS}
    for model_index, model in enumerate(models):
        label = model_label(model)
        need_v = uses(model.recipe, TermKind.V)
        need_lang = uses(model.recipe, TermKind.PI) or uses(model.recipe, TermKind.PIBAR)
        encoder = model.provenance.encoder
        cells: dict[str, dict[str, float | None]] = {m: {} for m in METRICS}
        for ood_type in ood_types:
            inputs = {}
            missing = None
            try:
                if need_v:
                    inputs["id_latents"] = sets.find("id", "", encoder)
                    inputs["ood_latents"] = sets.find("ood", ood_type, encoder)
                    if inputs["id_latents"] is None or inputs["ood_latents"] is None:
                        missing = f"no {encoder!r} embeddings"
                if need_lang and missing is None:
                    inputs["id_clips"] = sets.find("id", "", CLIP_IMAGE_ENCODER)
                    inputs["ood_clips"] = sets.find("ood", ood_type, CLIP_IMAGE_ENCODER)
                    if inputs["id_clips"] is None or inputs["ood_clips"] is None:
                        missing = "no clip-image embeddings"
            except OSError as exc:
                missing = str(exc)
            if missing:
                logger.warning("grid cell (%s, %s) skipped: %s", label, ood_type, missing)
                for m in METRICS:
                    cells[m][ood_type] = None
                continue
            cell_seed = seed ^ fnv1a64(f"{model_index}|{ood_type}")
            matrix = evaluate_pair(
                model,
                inputs.get("id_latents"),
                inputs.get("ood_latents"),
                inputs.get("id_clips"),
                inputs.get("ood_clips"),
                normal_prompts,
                anomalous_prompts,
                cell_seed,
            )
            for m in METRICS:
                try:
                    cells[m][ood_type] = _METRIC_FNS[m](matrix) * 100.0
                except UndefinedMetricError:
                    logger.warning("grid cell (%s, %s): %s undefined", label, ood_type, m)
                    cells[m][ood_type] = None
        for m in METRICS:
            defined = [v for v in cells[m].values() if v is not None]
            mean, std = aggregate_row(defined) if defined else (None, None)
            grid[m].append(ReportRow(label, dict(cells[m]), mean, std))

    return {
        m: EvaluationReport(metric=m, ood_types=ood_types, rows=tuple(grid[m]))
        for m in METRICS
    }


def _truncate2(x: float) -> str:
    """Two decimals, truncated toward zero (the tables' display convention);
    a 1e-9 nudge absorbs float noise just under a hundredth boundary."""
    return f"{math.floor(x * 100.0 + 1e-9) / 100.0:.2f}"


def render_report(report: EvaluationReport, format: str = "csv") -> str:
    header = ["label", *report.ood_types, "mean", "std"]
    if format == "csv":
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(header)
        for row in report.rows:
            cells = [row.label]
            for t in report.ood_types:
                value = row.per_type.get(t)
                cells.append("" if value is None else repr(value))
            cells.append("" if row.mean is None else repr(row.mean))
            cells.append("" if row.std is None else repr(row.std))
            writer.writerow(cells)
        return out.getvalue()
    if format == "markdown":
        lines = [
            "| " + " | ".join(header) + " |",
            "|" + "|".join(["---"] * len(header)) + "|",
        ]
        for row in report.rows:
            cells = [row.label]
            for t in report.ood_types:
                value = row.per_type.get(t)
                cells.append("-" if value is None else _truncate2(value))
            cells.append("-" if row.mean is None else _truncate2(row.mean))
            cells.append("-" if row.std is None else _truncate2(row.std))
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"
    raise DataError(f"unknown report format {format!r}")


def parse_report_csv(text: str, metric: str = "f1") -> EvaluationReport:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("empty report CSV") from None
    if len(header) < 3 or header[0] != "label" or header[-2:] != ["mean", "std"]:
        raise FormatError("report CSV header must be label,<types...>,mean,std")
    ood_types = tuple(header[1:-2])
    rows = []
    for record in reader:
        if len(record) != len(header):
            raise FormatError(f"report row has {len(record)} cells, expected {len(header)}")
        per_type = {
            t: (float(cell) if cell else None) for t, cell in zip(ood_types, record[1:-2])
        }
        mean = float(record[-2]) if record[-2] else None
        std = float(record[-1]) if record[-1] else None
        rows.append(ReportRow(record[0], per_type, mean, std))
    return EvaluationReport(metric=metric, ood_types=ood_types, rows=tuple(rows))
