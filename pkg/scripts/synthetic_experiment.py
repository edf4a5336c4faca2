"""End-to-end demo on synthetic embeddings.

Builds a small synthetic dataset (one in-distribution cluster, ten corrupted
variants, a toy CLIP-like embedding space with prompt vectors), writes the
EMB1 files and manifest, calibrates a detector per recipe, and prints the
F1/accuracy/FPR tables.

Usage:
    python scripts/synthetic_experiment.py --workdir /tmp/ood-demo --seed 0
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from ood_sentinel import (
    DatasetManifest,
    EmbeddingSet,
    ManifestEntry,
    PromptFiles,
    calibrate,
    evaluate_grid,
    parse_recipe,
    render_report,
    write_embedding_file,
    write_manifest,
)
from ood_sentinel.evaluation import OOD_TYPE_ORDER
from ood_sentinel.recipe import TermKind, uses

LATENT_DIM = 16
CLIP_DIM = 12
RECIPES = ["v", "pi", "pibar", "(pi,pibar)", "pi+v", "(pi,3v)", "2pibar", "(2pi,2pibar)"]


def unit(v):
    return v / np.linalg.norm(v)


def make_world(seed):
    """Synthetic scene geometry shared by both 'encoders'."""
    rng = np.random.default_rng(seed)
    latent_center = np.zeros(LATENT_DIM)
    latent_center[0] = 4.0
    normal_dir = unit(rng.standard_normal(CLIP_DIM))
    anomalous_dir = unit(
        rng.standard_normal(CLIP_DIM) - normal_dir * 0.5
    )
    return rng, latent_center, normal_dir, anomalous_dir


def encode(rng, latent_center, normal_dir, anomalous_dir, count, corruption_level):
    """Return (latents, clip_embeddings) for one batch of synthetic scenes.

    Corruption rotates the latent cluster and drags the clip embedding away
    from the normal-description direction toward the anomalous one.
    """
    angle = 0.9 * corruption_level
    rot = np.eye(LATENT_DIM)
    rot[0, 0] = rot[1, 1] = np.cos(angle)
    rot[0, 1], rot[1, 0] = -np.sin(angle), np.sin(angle)
    latents = (latent_center @ rot.T) + 0.35 * rng.standard_normal((count, LATENT_DIM))
    blend = unit(normal_dir * (1.0 - corruption_level) + anomalous_dir * corruption_level)
    clips = 3.0 * blend + 0.45 * rng.standard_normal((count, CLIP_DIM))
    return latents, clips


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--workdir", required=True, help="directory for generated files")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--confidence", type=float, default=0.95)
    parser.add_argument("--count-id", type=int, default=800)
    parser.add_argument("--count-ood", type=int, default=200)
    args = parser.parse_args(argv)

    workdir = Path(args.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    rng, latent_center, normal_dir, anomalous_dir = make_world(args.seed)

    # prompt embeddings: a few noisy copies of each description direction
    normal_prompts = EmbeddingSet.from_array(
        [unit(normal_dir + 0.1 * rng.standard_normal(CLIP_DIM)) for _ in range(4)]
    )
    anomalous_prompts = EmbeddingSet.from_array(
        [unit(anomalous_dir + 0.1 * rng.standard_normal(CLIP_DIM)) for _ in range(4)]
    )
    write_embedding_file(normal_prompts, workdir / "prompts_normal.emb")
    write_embedding_file(anomalous_prompts, workdir / "prompts_anom.emb")

    id_latents, id_clips = encode(
        rng, latent_center, normal_dir, anomalous_dir, args.count_id, 0.0
    )
    write_embedding_file(EmbeddingSet.from_array(id_latents), workdir / "id.latent.emb")
    write_embedding_file(EmbeddingSet.from_array(id_clips), workdir / "id.clip.emb")

    entries = [
        ManifestEntry("id.latent.emb", "id", "", "toy-encoder"),
        ManifestEntry("id.clip.emb", "id", "", "clip-image"),
    ]
    for i, ood_type in enumerate(OOD_TYPE_ORDER):
        level = 0.5 + 0.05 * i
        latents, clips = encode(
            rng, latent_center, normal_dir, anomalous_dir, args.count_ood, level
        )
        write_embedding_file(EmbeddingSet.from_array(latents), workdir / f"{ood_type}.latent.emb")
        write_embedding_file(EmbeddingSet.from_array(clips), workdir / f"{ood_type}.clip.emb")
        entries.append(ManifestEntry(f"{ood_type}.latent.emb", "ood", ood_type, "toy-encoder"))
        entries.append(ManifestEntry(f"{ood_type}.clip.emb", "ood", ood_type, "clip-image"))

    manifest = DatasetManifest(
        tuple(entries),
        PromptFiles("prompts_normal.emb", "prompts_anom.emb"),
        base_dir=workdir,
    )
    write_manifest(manifest, workdir / "manifest.json")

    id_latent_set = EmbeddingSet.from_array(id_latents)
    id_clip_set = EmbeddingSet.from_array(id_clips)
    models = []
    for text in RECIPES:
        recipe = parse_recipe(text)
        needs_v = uses(recipe, TermKind.V)
        model = calibrate(
            id_latent_set if needs_v else id_clip_set,
            normal_prompts,
            anomalous_prompts,
            recipe,
            confidence=args.confidence,
            fraction=0.5,
            seed=args.seed,
            clip_images=id_clip_set if needs_v else None,
            encoder="toy-encoder" if needs_v else "clip-image",
        )
        models.append(model)

    reports = evaluate_grid(manifest, models, seed=args.seed)
    for metric in ("f1", "accuracy", "fpr"):
        print(f"\n## {metric}\n")
        sys.stdout.write(render_report(reports[metric], "markdown"))
    print(f"\nartifacts written under {workdir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
