"""Regenerate the committed road-scene fixtures under tests/data/roads/.

The renderer is seeded, so reruns reproduce the same PNGs bit for bit.
"""

import argparse
from pathlib import Path

from PIL import Image

from emb_toolchain.synthroad import render_road_scene

FIXTURE_SEED_BASE = 52_000
FIXTURE_COUNT = 20


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--out",
        default=str(Path(__file__).resolve().parent.parent / "tests" / "data" / "roads"),
    )
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(FIXTURE_COUNT):
        frame = render_road_scene(FIXTURE_SEED_BASE + i)
        Image.fromarray(frame).save(out / f"road_{i:02d}.png")
    print(f"wrote {FIXTURE_COUNT} frames under {out}")


if __name__ == "__main__":
    main()
