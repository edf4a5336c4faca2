"""Train the bundled dual encoder on procedural scenes + captions.

Contrastive (symmetric InfoNCE) training over (frame, description) pairs:
clean frames pair with normal-scene captions, corrupted frames with
captions describing their corruption. The resulting checkpoint ships as
package data so language-similarity exports work fully offline.

Usage:
    python scripts/train_tinyclip.py --steps 900 --out src/emb_toolchain/data/tinyclip-road-v1.pt
"""

import argparse
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from emb_toolchain.corruptions import CORRUPTION_KINDS, CorruptionSpec, corrupt_array
from emb_toolchain.synthroad import render_road_scene
from emb_toolchain.tinyclip import TinyClip, featurize_text, save_checkpoint

NORMAL_CAPTIONS = [
    "a clear road on a sunny day",
    "an empty asphalt road under a bright blue sky",
    "a normal daytime driving scene with good visibility",
    "a clean open highway in clear weather",
    "a well lit road with sharp lane markings",
    "an ordinary town road at noon",
]

CORRUPTION_CAPTIONS = {
    "rain": ["rain streaks falling over the road", "a rainy windshield blurring the street"],
    "snow": ["a snowy road in a winter storm", "snow flakes covering the driving scene"],
    "night": ["a dark road at night with poor visibility", "driving in the dark after sunset"],
    "bright": ["an overexposed glaring bright road", "blinding sunlight washing out the camera"],
    "fog": ["a foggy road with very low visibility", "thick gray fog covering the street"],
    "contrast": ["a washed out low contrast gray scene", "a dull faded image of the road"],
    "defocus": ["a blurry out of focus camera image", "an unfocused soft picture of the street"],
    "gauss": ["a noisy grainy camera picture", "static noise corrupting the road image"],
    "glass": ["a distorted view as if through frosted glass", "a smeared wavy distortion of the scene"],
    "motion": ["a motion blurred streaky road image", "camera shake smearing the driving scene"],
}


def sample_pair(rng: np.random.Generator):
    frame = render_road_scene(int(rng.integers(0, 2**31)))
    if rng.random() < 0.40:
        return frame, NORMAL_CAPTIONS[rng.integers(len(NORMAL_CAPTIONS))]
    kind = CORRUPTION_KINDS[rng.integers(len(CORRUPTION_KINDS))]
    spec = CorruptionSpec(kind, int(rng.integers(1, 6)))
    frame = corrupt_array(frame, spec, rng)
    captions = CORRUPTION_CAPTIONS[kind]
    return frame, captions[rng.integers(len(captions))]


def make_batch(rng, batch_size):
    frames, captions = zip(*(sample_pair(rng) for _ in range(batch_size)))
    images = TinyClip.preprocess(np.stack(frames))
    texts = torch.from_numpy(np.stack([featurize_text(c) for c in captions]))
    return images, texts


def info_nce(image_emb, text_emb, scale):
    image_emb = F.normalize(image_emb, dim=-1)
    text_emb = F.normalize(text_emb, dim=-1)
    logits = scale.exp() * image_emb @ text_emb.T
    labels = torch.arange(logits.shape[0])
    return 0.5 * (F.cross_entropy(logits, labels) + F.cross_entropy(logits.T, labels))


def fog_direction_stat(model, rng):
    """Mean anomalous-prompt similarity: fog-corrupted minus clean frames."""
    frames = np.stack([render_road_scene(int(s)) for s in rng.integers(0, 2**31, 24)])
    fogged = np.stack(
        [corrupt_array(f, CorruptionSpec("fog", 3), np.random.default_rng(1)) for f in frames]
    )
    anom = model.encode_texts([c[0] for c in CORRUPTION_CAPTIONS.values()])
    def mean_sim(batch):
        emb = model.encode_images(batch)
        emb = emb / np.linalg.norm(emb, axis=1, keepdims=True)
        a = anom / np.linalg.norm(anom, axis=1, keepdims=True)
        return float((emb @ a.T).mean())
    return mean_sim(fogged) - mean_sim(frames)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=900)
    parser.add_argument("--batch", type=int, default=64)
    parser.add_argument("--lr", type=float, default=2e-3)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument(
        "--out",
        default=str(
            Path(__file__).resolve().parent.parent
            / "src" / "emb_toolchain" / "data" / "tinyclip-road-v1.pt"
        ),
    )
    args = parser.parse_args()

    torch.manual_seed(args.seed)
    rng = np.random.default_rng(args.seed)
    model = TinyClip()
    optimizer = torch.optim.Adam(model.parameters(), lr=args.lr)
    schedule = torch.optim.lr_scheduler.CosineAnnealingLR(optimizer, T_max=args.steps)

    for step in range(1, args.steps + 1):
        model.train()
        images, texts = make_batch(rng, args.batch)
        optimizer.zero_grad()
        loss = info_nce(model.image_encoder(images), model.text_encoder(texts), model.logit_scale)
        loss.backward()
        optimizer.step()
        schedule.step()
        if step % 50 == 0 or step == 1:
            print(f"step {step:4d} loss {float(loss):.4f}")

    gap = fog_direction_stat(model, np.random.default_rng(123))
    print(f"fog-vs-clean anomalous-similarity gap: {gap:+.4f} (want > 0)")
    save_checkpoint(model, args.out)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
