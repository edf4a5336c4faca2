"""Encoder registry: name + output width + weights source -> encode().

Weights sources:
  ``hf:<model-id>``        CLIP via transformers (needs the hub reachable)
  ``torchvision:<WEIGHTS>`` pretrained ResNet-50 / ViT (needs the hub)
  ``bundled:tinyclip-road-v1`` the packaged dual encoder, fully offline
  ``random:<seed>``        seeded untrained weights, pipeline testing only
  ``file:<path>`` / path   trained VAE checkpoint
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import torch

from . import tinyclip as tc
from .errors import DataError, UsageError
from .vae import load_vae

PUBLISHED_DIMS = {"clip-image": 512, "clip-text": 512, "resnet50": 2048, "vit": 768}
ENCODER_NAMES = ("vae", "resnet50", "vit", "clip-image", "clip-text")

DEFAULT_SOURCES = {
    "clip-image": "hf:openai/clip-vit-base-patch32",
    "clip-text": "hf:openai/clip-vit-base-patch32",
    "resnet50": "torchvision:IMAGENET1K_V2",
    "vit": "torchvision:IMAGENET1K_V1",
}


@dataclass(frozen=True)
class EncoderSpec:
    name: str
    output_dim: int
    weights_source: str

    def __post_init__(self):
        if self.name not in ENCODER_NAMES:
            raise UsageError(f"unknown encoder {self.name!r}, expected one of {ENCODER_NAMES}")
        if self.output_dim < 1:
            raise UsageError("output_dim must be positive")
        published = PUBLISHED_DIMS.get(self.name)
        if published is not None and self.output_dim != published:
            raise UsageError(
                f"{self.name} embeds at width {published}, not {self.output_dim}"
            )


def default_spec(name: str, weights_source: str | None = None, latent_dim: int = 32) -> EncoderSpec:
    if name == "vae":
        if not weights_source:
            raise UsageError("vae encoder needs a weights file (train-vae output)")
        return EncoderSpec("vae", latent_dim, weights_source)
    source = weights_source or DEFAULT_SOURCES.get(name)
    if source is None:
        raise UsageError(f"unknown encoder {name!r}")
    return EncoderSpec(name, PUBLISHED_DIMS[name], source)


class Encoder:
    """Runs one model in deterministic inference mode."""

    def __init__(self, spec: EncoderSpec, encode_fn: Callable[[np.ndarray], np.ndarray],
                 encode_text_fn: Callable[[list[str]], np.ndarray] | None = None):
        self.spec = spec
        self._encode = encode_fn
        self._encode_text = encode_text_fn

    def encode_images(self, images_uint8: np.ndarray, batch_size: int = 64) -> np.ndarray:
        chunks = [
            self._encode(images_uint8[start:start + batch_size])
            for start in range(0, images_uint8.shape[0], batch_size)
        ]
        out = np.vstack(chunks) if chunks else np.zeros((0, self.spec.output_dim), np.float32)
        if out.shape[1] != self.spec.output_dim:
            raise DataError(
                f"{self.spec.name} produced width {out.shape[1]}, expected {self.spec.output_dim}"
            )
        return out.astype(np.float32)

    def encode_texts(self, sentences: list[str]) -> np.ndarray:
        if self._encode_text is None:
            raise UsageError(f"{self.spec.name} is not a text encoder")
        if not sentences:
            return np.zeros((0, self.spec.output_dim), np.float32)
        return self._encode_text(sentences).astype(np.float32)


_IMAGENET_MEAN = torch.tensor([0.485, 0.456, 0.406]).view(1, 3, 1, 1)
_IMAGENET_STD = torch.tensor([0.229, 0.224, 0.225]).view(1, 3, 1, 1)


def _imagenet_preprocess(images_uint8: np.ndarray) -> torch.Tensor:
    x = torch.from_numpy(np.ascontiguousarray(images_uint8)).float() / 255.0
    x = x.permute(0, 3, 1, 2)
    x = torch.nn.functional.interpolate(x, size=(224, 224), mode="bilinear", align_corners=False)
    return (x - _IMAGENET_MEAN) / _IMAGENET_STD


def _torchvision_backbone(name: str, source: str):
    import torchvision.models as models

    kind, _, ident = source.partition(":")
    if kind == "random":
        torch.manual_seed(int(ident or 0))
        weights = None
    elif kind == "torchvision":
        weights = ident or None  # resolved by torchvision; needs the hub
    else:
        raise UsageError(f"{name} cannot load weights from {source!r}")
    if name == "resnet50":
        model = models.resnet50(weights=weights)
        model.fc = torch.nn.Identity()  # penultimate 2048-dim features
    else:
        model = models.vit_b_16(weights=weights)
        model.heads = torch.nn.Identity()  # class-token features, 768-dim
    model.eval()

    @torch.no_grad()
    def encode(images_uint8):
        return model(_imagenet_preprocess(images_uint8)).numpy()

    return encode


def _clip_pair(source: str):
    kind, _, ident = source.partition(":")
    if kind == "bundled":
        if ident != tc.BUNDLED_NAME:
            raise UsageError(f"no bundled dual encoder named {ident!r}")
        model = tc.load_bundled()
        return model.encode_images, model.encode_texts
    if kind == "file":
        model = tc.load_checkpoint(ident)
        return model.encode_images, model.encode_texts
    if kind == "hf":
        try:
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise UsageError("hf: sources need the 'transformers' extra installed") from exc
        model = CLIPModel.from_pretrained(ident)
        processor = CLIPProcessor.from_pretrained(ident)
        model.eval()

        @torch.no_grad()
        def encode_images(images_uint8):
            inputs = processor(images=list(images_uint8), return_tensors="pt")
            return model.get_image_features(**inputs).numpy()

        @torch.no_grad()
        def encode_texts(sentences):
            inputs = processor(text=sentences, return_tensors="pt", padding=True)
            return model.get_text_features(**inputs).numpy()

        return encode_images, encode_texts
    raise UsageError(f"clip encoders cannot load weights from {source!r}")


def make_encoder(spec: EncoderSpec) -> Encoder:
    if spec.name == "vae":
        source = spec.weights_source.partition(":")[2] if spec.weights_source.startswith("file:") else spec.weights_source
        model = load_vae(source)
        if model.latent_dim != spec.output_dim:
            raise UsageError(
                f"vae checkpoint has latent_dim {model.latent_dim}, spec says {spec.output_dim}"
            )
        return Encoder(spec, model.encode_images)
    if spec.name in ("resnet50", "vit"):
        return Encoder(spec, _torchvision_backbone(spec.name, spec.weights_source))
    encode_images, encode_texts = _clip_pair(spec.weights_source)
    if spec.name == "clip-text":
        return Encoder(spec, encode_images, encode_texts)
    return Encoder(spec, encode_images, encode_texts)
