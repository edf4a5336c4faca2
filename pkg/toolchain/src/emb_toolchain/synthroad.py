"""Procedural clear-road scene renderer.

Generates small daytime driving frames (sky, horizon, asphalt wedge, lane
markings, roadside strips) with seeded variation. These frames back the
bundled test fixtures and the training set of the bundled dual encoder;
they stand in for collected camera data at desk scale.
"""

from __future__ import annotations

import numpy as np

SIZE = 64


def render_road_scene(seed: int, size: int = SIZE) -> np.ndarray:
    """One clear-road RGB frame (uint8, size x size) for a seed."""
    rng = np.random.default_rng(seed)
    img = np.zeros((size, size, 3), dtype=np.float64)

    horizon = int(size * rng.uniform(0.35, 0.5))
    ys = np.arange(size)[:, None]

    # sky: blue-to-pale vertical gradient with a hue wobble
    sky_top = np.array([0.35, 0.55, 0.95]) + rng.uniform(-0.06, 0.06, 3)
    sky_bottom = np.array([0.75, 0.85, 0.98]) + rng.uniform(-0.04, 0.04, 3)
    t = (ys / max(horizon, 1)).clip(0, 1)
    img[:horizon] = (sky_top * (1 - t[:horizon]) + sky_bottom * t[:horizon])[:, None, :]

    # sun disk somewhere high
    sun_x = rng.integers(6, size - 6)
    sun_y = rng.integers(3, max(horizon - 6, 4))
    yy, xx = np.mgrid[0:size, 0:size]
    sun = np.exp(-((xx - sun_x) ** 2 + (yy - sun_y) ** 2) / rng.uniform(4, 12))
    img[:horizon] += sun[:horizon, :, None] * np.array([0.9, 0.85, 0.6]) * 0.8

    # grass shoulders below the horizon
    grass = np.array([0.30, 0.48, 0.22]) + rng.uniform(-0.05, 0.05, 3)
    img[horizon:] = grass

    # asphalt wedge from the bottom edge to a vanishing point on the horizon
    vp_x = size / 2 + rng.uniform(-6, 6)
    half_bottom = size * rng.uniform(0.28, 0.4)
    rows = np.arange(horizon, size)
    frac = (rows - horizon) / max(size - horizon - 1, 1)
    asphalt = np.array([0.28, 0.28, 0.30]) + rng.uniform(-0.03, 0.03, 3)
    centers = vp_x + (size / 2 - vp_x) * frac
    halves = 1.0 + (half_bottom - 1.0) * frac
    for row, center, half in zip(rows, centers, halves):
        lo = int(np.clip(center - half, 0, size))
        hi = int(np.clip(center + half, 0, size))
        img[row, lo:hi] = asphalt * rng.uniform(0.96, 1.04)

    # dashed center line
    lane = np.array([0.95, 0.9, 0.6])
    phase = rng.integers(0, 4)
    for i, (row, center, half) in enumerate(zip(rows, centers, halves)):
        if half > 2 and (i + phase) % 4 < 2:
            c = int(np.clip(center, 1, size - 2))
            img[row, c - (1 if half > 12 else 0): c + 1] = lane

    img += rng.normal(0.0, 0.012, img.shape)  # sensor grain
    return (img.clip(0, 1) * 255).round().astype(np.uint8)


def scene_batch(count: int, seed: int, size: int = SIZE) -> np.ndarray:
    base = np.random.default_rng(seed).integers(0, 2**31, size=count)
    return np.stack([render_road_scene(int(s), size) for s in base])
