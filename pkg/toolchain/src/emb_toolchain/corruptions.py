"""The ten corruption generators standing in for weather/sensor shifts.

Each corruption is deterministic given (kind, severity, seed, filename):
per-image randomness comes from a stable hash, so regenerating a directory
reproduces it bit for bit regardless of traversal order.
"""

from __future__ import annotations

import shutil
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DataError, UsageError

CORRUPTION_KINDS = (
    "rain", "snow", "night", "bright", "fog",
    "contrast", "defocus", "gauss", "glass", "motion",
)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".webp")


@dataclass(frozen=True)
class CorruptionSpec:
    kind: str
    severity: int = 3

    def __post_init__(self):
        if self.kind not in CORRUPTION_KINDS:
            raise UsageError(f"unknown corruption kind {self.kind!r}")
        if not 1 <= self.severity <= 5:
            raise UsageError(f"severity must be 1..5, got {self.severity}")


def _stable_seed(*parts) -> int:
    h = 0xCBF29CE484222325
    for byte in "|".join(str(p) for p in parts).encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & ((1 << 64) - 1)
    return h


def _shift_mean(img: np.ndarray, offsets) -> np.ndarray:
    acc = np.zeros_like(img)
    for dy, dx in offsets:
        acc += np.roll(np.roll(img, dy, axis=0), dx, axis=1)
    return acc / len(offsets)


def _disk_offsets(radius: int):
    pts = [
        (dy, dx)
        for dy in range(-radius, radius + 1)
        for dx in range(-radius, radius + 1)
        if dy * dy + dx * dx <= radius * radius
    ]
    return pts


def _line_offsets(length: int, angle: float):
    steps = np.linspace(-(length - 1) / 2, (length - 1) / 2, length)
    return [(int(round(s * np.sin(angle))), int(round(s * np.cos(angle)))) for s in steps]


def corrupt_array(img: np.ndarray, spec: CorruptionSpec, rng: np.random.Generator) -> np.ndarray:
    """Apply one corruption to an RGB uint8 array."""
    x = img.astype(np.float64) / 255.0
    h, w = x.shape[:2]
    s = spec.severity
    if spec.kind == "bright":
        x = x * (1.0 + 0.12 * s) + 0.04 * s
    elif spec.kind == "night":
        x = (x * (0.55 - 0.07 * s)) ** 1.25
        x[..., 2] *= 1.25  # street scenes go blue after dark
    elif spec.kind == "contrast":
        x = (x - x.mean()) * (0.8 - 0.13 * s) + x.mean()
    elif spec.kind == "fog":
        depth = np.linspace(1.0, 0.45, h)[:, None, None]
        alpha = (0.12 + 0.13 * s) * depth
        x = x * (1 - alpha) + 0.78 * alpha
    elif spec.kind == "gauss":
        x = x + rng.normal(0.0, 0.03 + 0.035 * s, x.shape)
    elif spec.kind == "defocus":
        x = _shift_mean(x, _disk_offsets(s))
    elif spec.kind == "motion":
        x = _shift_mean(x, _line_offsets(2 * s + 1, rng.uniform(0, np.pi)))
    elif spec.kind == "glass":
        delta = max(1, (s + 1) // 2)
        for _ in range(s):
            jy = rng.integers(-delta, delta + 1, (h, w))
            jx = rng.integers(-delta, delta + 1, (h, w))
            yy = np.clip(np.arange(h)[:, None] + jy, 0, h - 1)
            xx = np.clip(np.arange(w)[None, :] + jx, 0, w - 1)
            x = x[yy, xx]
    elif spec.kind == "rain":
        overlay = np.zeros((h, w))
        length = 6 + s
        for _ in range(10 * s):
            y0 = int(rng.integers(0, h))
            x0 = int(rng.integers(0, w))
            for t in range(length):
                yy, xx = y0 + t, x0 + t // 3
                if yy < h and xx < w:
                    overlay[yy, xx] = 1.0
        x = x * (1 - 0.05 * s)
        x = x + overlay[..., None] * np.array([0.55, 0.58, 0.62]) * 0.5
    elif spec.kind == "snow":
        flakes = rng.random((h, w)) < (0.004 * s * s + 0.004 * s)
        x = x * (1 - 0.04 * s) + 0.12 * s * 0.5  # flat veiling glare
        x[flakes] = 0.95
    return (x.clip(0, 1) * 255).round().astype(np.uint8)


def list_images(directory) -> list[Path]:
    directory = Path(directory)
    return sorted(
        (p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES),
        key=lambda p: p.name,
    )


def corrupt_images(images_dir, spec: CorruptionSpec | None, out_dir, seed: int = 0) -> list[Path]:
    """Corrupt every image into out_dir under the same filenames.

    With spec=None the files are copied byte-identically (the identity
    pipeline used to sanity-check exports).
    """
    paths = list_images(images_dir)
    if not paths:
        raise DataError(f"no images found under {images_dir}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for path in paths:
        target = out_dir / path.name
        if spec is None:
            shutil.copyfile(path, target)
        else:
            rng = np.random.default_rng(
                _stable_seed(spec.kind, spec.severity, seed, path.name)
            )
            img = np.asarray(Image.open(path).convert("RGB"))
            Image.fromarray(corrupt_array(img, spec, rng)).save(target)
        written.append(target)
    return written


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    mse = np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2)
    if mse == 0:
        return float("inf")
    return 10.0 * np.log10(255.0**2 / mse)
