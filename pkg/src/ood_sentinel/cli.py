"""Command-line surface: calibrate, detect, eval, recipe.

Exit codes partition the failure classes: 2 usage, 3 file format, 4 data,
5 numeric. All randomness flows from --seed, so any command re-run with
identical flags produces byte-identical outputs.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import calibration, detection, evaluation
from .embedding_io import (
    DatasetManifest,
    EmbeddingSet,
    ManifestEntry,
    read_embedding_file,
    read_manifest,
)
from .errors import EngineError, RecipeParseError, UsageError
from .recipe import parse_recipe, recipe_dimension, render_recipe

_LOG_LEVELS = {"error": "ERROR", "warn": "WARNING", "info": "INFO", "debug": "DEBUG"}


def _configure_logging() -> None:
    name = os.environ.get("OOD_SENTINEL_LOG", "warn").lower()
    level = _LOG_LEVELS.get(name, "WARNING")
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s: %(message)s")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ood-sentinel",
        description="Out-of-distribution detection over composed latent representations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    cal = sub.add_parser("calibrate", help="fit a detector model on in-distribution data")
    cal.add_argument("--id", dest="id_path", required=True, help="iD embedding file (EMB1)")
    cal.add_argument("--recipe", required=True, help="composition recipe, e.g. '(pi,3v)'")
    cal.add_argument("--prompts-normal", help="normal prompt embeddings (EMB1)")
    cal.add_argument("--prompts-anom", help="anomalous prompt embeddings (EMB1)")
    cal.add_argument("--clip-images", help="row-aligned CLIP image embeddings (EMB1)")
    cal.add_argument("--confidence", type=float, default=0.9)
    cal.add_argument("--split", type=float, default=0.5)
    cal.add_argument("--seed", type=int, default=0)
    cal.add_argument("--encoder", default="", help="encoder name recorded in provenance")
    cal.add_argument("--out", required=True, help="model file to write")

    det = sub.add_parser("detect", help="score embeddings against a model")
    det.add_argument("--model", required=True, help="calibrated model file")
    det.add_argument("--latents", help="latent embeddings v (EMB1)")
    det.add_argument("--clip-images", help="CLIP image embeddings (EMB1)")
    det.add_argument("--prompts-normal", help="normal prompt embeddings (EMB1)")
    det.add_argument("--prompts-anom", help="anomalous prompt embeddings (EMB1)")
    det.add_argument("--out", help="CSV output path (default: stdout)")

    ev = sub.add_parser("eval", help="metric grids over a dataset manifest")
    ev.add_argument("--manifest", help="dataset manifest (JSON)")
    ev.add_argument("--id", dest="id_path", help="iD embeddings; single-pair mode with --ood")
    ev.add_argument("--ood", dest="ood_path", help="oD embeddings; single-pair mode with --id")
    ev.add_argument("--models", nargs="+", required=True, help="model files, one row each")
    ev.add_argument("--metric", choices=["f1", "accuracy", "fpr", "all"], default="all")
    ev.add_argument("--format", choices=["csv", "markdown"], default="csv")
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--out", help="output prefix; writes <prefix>.<metric>.<ext>")

    rec = sub.add_parser("recipe", help="normalize a recipe and echo its dimension")
    rec.add_argument("text", help="recipe string")
    rec.add_argument("--dim-v", type=int, default=0)
    rec.add_argument("--n-pi", type=int, default=0)
    rec.add_argument("--n-pibar", type=int, default=0)

    return parser


def _load_optional(path: str | None) -> EmbeddingSet | None:
    return read_embedding_file(path) if path else None


def _check_unit_interval(name: str, value: float) -> None:
    if not (0.0 < value < 1.0):
        raise UsageError(f"{name} must be strictly between 0 and 1, got {value}")


def cmd_calibrate(args) -> int:
    _check_unit_interval("--confidence", args.confidence)
    _check_unit_interval("--split", args.split)
    recipe = parse_recipe(args.recipe)
    model = calibration.calibrate(
        id_set=read_embedding_file(args.id_path),
        normal_prompts=_load_optional(args.prompts_normal),
        anomalous_prompts=_load_optional(args.prompts_anom),
        recipe=recipe,
        confidence=args.confidence,
        fraction=args.split,
        seed=args.seed,
        clip_images=_load_optional(args.clip_images),
        encoder=args.encoder,
    )
    calibration.save_model(model, args.out)
    print(
        f"dim={model.dim} n_v={model.provenance.n_v} n_f={model.provenance.n_f} "
        f"gamma_shape={model.gamma.shape:.9g} gamma_scale={model.gamma.scale:.9g} "
        f"threshold={model.threshold:.9g}"
    )
    return 0


def cmd_detect(args) -> int:
    model = calibration.load_model(args.model)
    results = detection.batch_detect(
        model,
        latents=_load_optional(args.latents),
        clip_images=_load_optional(args.clip_images),
        normal_prompts=_load_optional(args.prompts_normal),
        anomalous_prompts=_load_optional(args.prompts_anom),
    )
    text = detection.detection_csv(results)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _pair_manifest(args) -> DatasetManifest:
    """Manifest-free mode: one iD file against one oD file."""
    models = [calibration.load_model(p) for p in args.models]
    encoders = {m.provenance.encoder for m in models}
    if len(encoders) != 1:
        raise UsageError("--id/--ood mode needs models sharing one encoder name")
    encoder = encoders.pop()
    id_path = Path(args.id_path).resolve()
    ood_path = Path(args.ood_path).resolve()
    ood_type = ood_path.stem
    return DatasetManifest(
        (
            ManifestEntry(str(id_path), "id", "", encoder),
            ManifestEntry(str(ood_path), "ood", ood_type, encoder),
        )
    )


def cmd_eval(args) -> int:
    if args.manifest:
        manifest = read_manifest(args.manifest)
    elif args.id_path and args.ood_path:
        manifest = _pair_manifest(args)
    else:
        raise UsageError("eval needs --manifest, or both --id and --ood")
    models = [calibration.load_model(p) for p in args.models]
    reports = evaluation.evaluate_grid(manifest, models, seed=args.seed)
    wanted = evaluation.METRICS if args.metric == "all" else (args.metric,)
    ext = "csv" if args.format == "csv" else "md"
    for metric in wanted:
        text = evaluation.render_report(reports[metric], args.format)
        if args.out:
            path = Path(f"{args.out}.{metric}.{ext}")
            path.write_text(text, encoding="utf-8")
            print(f"wrote {path}")
        else:
            print(f"# metric: {metric}")
            sys.stdout.write(text)
    return 0


def cmd_recipe(args) -> int:
    recipe = parse_recipe(args.text)
    print(render_recipe(recipe))
    if args.dim_v or args.n_pi or args.n_pibar:
        print(recipe_dimension(recipe, args.dim_v, args.n_pi, args.n_pibar))
    return 0


_COMMANDS = {
    "calibrate": cmd_calibrate,
    "detect": cmd_detect,
    "eval": cmd_eval,
    "recipe": cmd_recipe,
}


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except RecipeParseError as exc:
        text = getattr(args, "text", None) or getattr(args, "recipe", "")
        print(f"error: {exc.message}", file=sys.stderr)
        if text:
            print(f"  {text}", file=sys.stderr)
            print("  " + " " * min(exc.position, len(text)) + "^", file=sys.stderr)
        return exc.exit_code
    except EngineError as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
