"""Encoder toolchain: embeddings, prompt embeddings, corruptions, VAE."""

from .corruptions import CORRUPTION_KINDS, CorruptionSpec, corrupt_images, psnr
from .emb1 import read_emb1, write_emb1
from .encoders import ENCODER_NAMES, Encoder, EncoderSpec, default_spec, make_encoder
from .export import export_embeddings, export_prompt_embeddings, read_prompt_file
from .vae import ConvVAE, load_vae, train_vae

__version__ = "0.1.0"

__all__ = [
    "CORRUPTION_KINDS",
    "ConvVAE",
    "CorruptionSpec",
    "ENCODER_NAMES",
    "Encoder",
    "EncoderSpec",
    "corrupt_images",
    "default_spec",
    "export_embeddings",
    "export_prompt_embeddings",
    "load_vae",
    "make_encoder",
    "psnr",
    "read_emb1",
    "read_prompt_file",
    "train_vae",
    "write_emb1",
]
