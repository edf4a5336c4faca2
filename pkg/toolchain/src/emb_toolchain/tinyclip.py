"""Small CLIP-style dual encoder with a 512-dim shared embedding space.

The bundled checkpoint (``tinyclip-road-v1``) is trained contrastively on
procedural road scenes paired with short scene descriptions, so language
similarities behave sensibly offline where the published CLIP weights
cannot be fetched. The published-weights path stays the default upstream.
"""

from __future__ import annotations

import re
from importlib import resources

import numpy as np
import torch
from torch import nn

EMBED_DIM = 512
HASH_DIM = 1024
IMAGE_SIZE = 64
BUNDLED_NAME = "tinyclip-road-v1"

_WORD = re.compile(r"[a-z0-9]+")
_MASK64 = (1 << 64) - 1


def _fnv(text: str) -> int:
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return h


def featurize_text(text: str) -> np.ndarray:
    """Hashed bag of word unigrams and bigrams, L2-normalized.

    Stable across processes (FNV, not the salted builtin hash), so a
    sentence always maps to the same feature vector.
    """
    words = _WORD.findall(text.lower())
    feats = np.zeros(HASH_DIM, dtype=np.float32)
    for token in words:
        feats[_fnv(token) % HASH_DIM] += 1.0
    for a, b in zip(words, words[1:]):
        feats[_fnv(f"{a} {b}") % HASH_DIM] += 1.0
    norm = np.linalg.norm(feats)
    return feats / norm if norm > 0 else feats


class TinyImageEncoder(nn.Module):
    def __init__(self):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv2d(3, 32, 3, stride=2, padding=1), nn.ReLU(),
            nn.Conv2d(32, 64, 3, stride=2, padding=1), nn.ReLU(),
            nn.Conv2d(64, 128, 3, stride=2, padding=1), nn.ReLU(),
            nn.AdaptiveAvgPool2d(1), nn.Flatten(),
            nn.Linear(128, EMBED_DIM),
        )

    def forward(self, x):
        return self.net(x)


class TinyTextEncoder(nn.Module):
    def __init__(self):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(HASH_DIM, 256), nn.ReLU(),
            nn.Linear(256, EMBED_DIM),
        )

    def forward(self, x):
        return self.net(x)


class TinyClip(nn.Module):
    def __init__(self):
        super().__init__()
        self.image_encoder = TinyImageEncoder()
        self.text_encoder = TinyTextEncoder()
        self.logit_scale = nn.Parameter(torch.tensor(2.5))

    @staticmethod
    def preprocess(images_uint8: np.ndarray) -> torch.Tensor:
        """N x H x W x 3 uint8 -> normalized N x 3 x 64 x 64 float tensor."""
        x = torch.from_numpy(np.ascontiguousarray(images_uint8)).float() / 255.0
        x = x.permute(0, 3, 1, 2)
        if x.shape[-1] != IMAGE_SIZE or x.shape[-2] != IMAGE_SIZE:
            x = torch.nn.functional.interpolate(
                x, size=(IMAGE_SIZE, IMAGE_SIZE), mode="bilinear", align_corners=False
            )
        return (x - 0.5) / 0.5

    @torch.no_grad()
    def encode_images(self, images_uint8: np.ndarray) -> np.ndarray:
        self.eval()
        return self.image_encoder(self.preprocess(images_uint8)).numpy()

    @torch.no_grad()
    def encode_texts(self, sentences: list[str]) -> np.ndarray:
        self.eval()
        feats = np.stack([featurize_text(s) for s in sentences])
        return self.text_encoder(torch.from_numpy(feats)).numpy()


def save_checkpoint(model: TinyClip, path) -> None:
    torch.save(
        {
            "version": BUNDLED_NAME,
            "config": {"embed_dim": EMBED_DIM, "hash_dim": HASH_DIM, "image_size": IMAGE_SIZE},
            "state_dict": model.state_dict(),
        },
        path,
    )


def load_checkpoint(path) -> TinyClip:
    payload = torch.load(path, map_location="cpu", weights_only=True)
    model = TinyClip()
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model


def load_bundled() -> TinyClip:
    ref = resources.files("emb_toolchain").joinpath(f"data/{BUNDLED_NAME}.pt")
    with resources.as_file(ref) as path:
        return load_checkpoint(path)
