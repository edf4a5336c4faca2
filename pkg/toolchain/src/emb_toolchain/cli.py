"""Toolchain CLI: export, prompts, corrupt, train-vae."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .corruptions import CORRUPTION_KINDS, CorruptionSpec, corrupt_images
from .encoders import ENCODER_NAMES, default_spec
from .errors import ToolchainError
from .export import export_embeddings, export_prompt_embeddings
from .vae import train_vae


def _configure_logging() -> None:
    level = {"error": "ERROR", "warn": "WARNING", "info": "INFO", "debug": "DEBUG"}.get(
        os.environ.get("OOD_SENTINEL_LOG", "warn").lower(), "WARNING"
    )
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s: %(message)s")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emb-toolchain",
        description="Produce EMB1 embedding files from images and prompts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    exp = sub.add_parser("export", help="embed a directory of images")
    exp.add_argument("--images", required=True)
    exp.add_argument("--encoder", choices=ENCODER_NAMES, required=True)
    exp.add_argument("--weights", help="weights source (hf:/torchvision:/bundled:/random:/file)")
    exp.add_argument("--latent-dim", type=int, default=32, help="vae output width")
    exp.add_argument("--out", required=True)

    prm = sub.add_parser("prompts", help="embed normal/anomalous prompt sentences")
    prm.add_argument("--prompts", required=True, help='JSON {"normal": [...], "anomalous": [...]}')
    prm.add_argument("--weights", help="clip-text weights source")
    prm.add_argument("--out-normal", required=True)
    prm.add_argument("--out-anom", required=True)

    cor = sub.add_parser("corrupt", help="apply one corruption to a directory of images")
    cor.add_argument("--images", required=True)
    cor.add_argument("--kind", choices=CORRUPTION_KINDS, required=True)
    cor.add_argument("--severity", type=int, default=3)
    cor.add_argument("--seed", type=int, default=0)
    cor.add_argument("--out", required=True)

    vae = sub.add_parser("train-vae", help="train the 2-conv VAE on in-distribution images")
    vae.add_argument("--images", required=True)
    vae.add_argument("--latent-dim", type=int, default=32)
    vae.add_argument("--epochs", type=int, default=10)
    vae.add_argument("--seed", type=int, default=0)
    vae.add_argument("--out", required=True)

    return parser


def cmd_export(args) -> int:
    spec = default_spec(args.encoder, args.weights, latent_dim=args.latent_dim)
    out = export_embeddings(args.images, spec, args.out)
    print(f"wrote {out}")
    return 0


def cmd_prompts(args) -> int:
    spec = default_spec("clip-text", args.weights)
    out_n, out_a = export_prompt_embeddings(args.prompts, args.out_normal, args.out_anom, spec)
    print(f"wrote {out_n}")
    print(f"wrote {out_a}")
    return 0


def cmd_corrupt(args) -> int:
    spec = CorruptionSpec(args.kind, args.severity)
    written = corrupt_images(args.images, spec, args.out, seed=args.seed)
    print(f"wrote {len(written)} images under {args.out}")
    return 0


def cmd_train_vae(args) -> int:
    _, losses = train_vae(
        args.images,
        latent_dim=args.latent_dim,
        epochs=args.epochs,
        seed=args.seed,
        out=args.out,
    )
    print(f"wrote {args.out} (final loss {losses[-1]:.4f})")
    return 0


_COMMANDS = {
    "export": cmd_export,
    "prompts": cmd_prompts,
    "corrupt": cmd_corrupt,
    "train-vae": cmd_train_vae,
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
    except ToolchainError as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
