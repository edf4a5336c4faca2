"""Embedding exports: images or prompt sentences to EMB1 files."""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .corruptions import list_images
from .emb1 import write_emb1
from .encoders import Encoder, EncoderSpec, default_spec, make_encoder
from .errors import DataError

logger = logging.getLogger(__name__)


def _load_rgb(path: Path) -> np.ndarray | None:
    try:
        return np.asarray(Image.open(path).convert("RGB"))
    except (UnidentifiedImageError, OSError):
        return None


def export_embeddings(images_dir, encoder: EncoderSpec | Encoder, out) -> Path:
    """One embedding row per decodable image, rows sorted by filename.

    Undecodable files are skipped with a warning and listed in a
    ``<out>.skipped.log`` sidecar.
    """
    runner = encoder if isinstance(encoder, Encoder) else make_encoder(encoder)
    paths = list_images(images_dir)
    frames, skipped = [], []
    size = None
    for path in paths:
        img = _load_rgb(path)
        if img is None:
            logger.warning("skipping undecodable image %s", path)
            skipped.append(path.name)
            continue
        if size is None:
            size = img.shape
        elif img.shape != size:
            # uniform tensor batch; encoders resize internally anyway
            img = np.asarray(Image.fromarray(img).resize((size[1], size[0])))
        frames.append(img)
    if not frames:
        raise DataError(f"no decodable images under {images_dir}")
    rows = runner.encode_images(np.stack(frames))
    out = Path(out)
    write_emb1(rows, out)
    if skipped:
        sidecar = out.with_name(out.name + ".skipped.log")
        sidecar.write_text("".join(f"{name}\n" for name in skipped), encoding="utf-8")
    return out


def read_prompt_file(path) -> tuple[list[str], list[str]]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: not a valid prompt file: {exc}") from exc
    normal = [str(s) for s in doc.get("normal", [])]
    anomalous = [str(s) for s in doc.get("anomalous", [])]
    if not normal and not anomalous:
        raise DataError(f"{path}: prompt file has neither normal nor anomalous sentences")
    return normal, anomalous


def export_prompt_embeddings(
    prompt_file, out_normal, out_anom, encoder: EncoderSpec | Encoder | None = None
) -> tuple[Path, Path]:
    """Embed both sentence lists, order-preserving; empty lists give count=0 files."""
    if encoder is None:
        encoder = default_spec("clip-text")
    runner = encoder if isinstance(encoder, Encoder) else make_encoder(encoder)
    normal, anomalous = read_prompt_file(prompt_file)
    dim = runner.spec.output_dim
    for sentences, out in ((normal, out_normal), (anomalous, out_anom)):
        rows = runner.encode_texts(sentences) if sentences else np.zeros((0, dim), np.float32)
        write_emb1(rows, out)
    return Path(out_normal), Path(out_anom)
