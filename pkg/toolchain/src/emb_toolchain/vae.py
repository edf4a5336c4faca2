"""Convolutional VAE (2-conv encoder) trained on in-distribution frames.

The exported embedding of an image is the latent mean vector.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
from torch import nn
from PIL import Image

from .corruptions import list_images
from .errors import DataError

IMAGE_SIZE = 64
_FLAT = 64 * (IMAGE_SIZE // 4) * (IMAGE_SIZE // 4)


class ConvVAE(nn.Module):
    def __init__(self, latent_dim: int = 32):
        super().__init__()
        self.latent_dim = latent_dim
        self.encoder = nn.Sequential(
            nn.Conv2d(3, 32, 4, stride=2, padding=1), nn.ReLU(),
            nn.Conv2d(32, 64, 4, stride=2, padding=1), nn.ReLU(),
            nn.Flatten(),
        )
        self.fc_mu = nn.Linear(_FLAT, latent_dim)
        self.fc_logvar = nn.Linear(_FLAT, latent_dim)
        self.fc_up = nn.Linear(latent_dim, _FLAT)
        self.decoder = nn.Sequential(
            nn.ConvTranspose2d(64, 32, 4, stride=2, padding=1), nn.ReLU(),
            nn.ConvTranspose2d(32, 3, 4, stride=2, padding=1), nn.Sigmoid(),
        )

    def encode(self, x):
        h = self.encoder(x)
        return self.fc_mu(h), self.fc_logvar(h)

    def decode(self, z):
        h = self.fc_up(z).view(-1, 64, IMAGE_SIZE // 4, IMAGE_SIZE // 4)
        return self.decoder(h)

    def forward(self, x):
        mu, logvar = self.encode(x)
        std = torch.exp(0.5 * logvar)
        z = mu + std * torch.randn_like(std)
        return self.decode(z), mu, logvar

    @torch.no_grad()
    def encode_images(self, images_uint8: np.ndarray) -> np.ndarray:
        """Latent mean rows for an N x H x W x 3 uint8 batch."""
        self.eval()
        x = _preprocess(images_uint8)
        mu, _ = self.encode(x)
        return mu.numpy()


def _preprocess(images_uint8: np.ndarray) -> torch.Tensor:
    x = torch.from_numpy(np.ascontiguousarray(images_uint8)).float() / 255.0
    x = x.permute(0, 3, 1, 2)
    if x.shape[-1] != IMAGE_SIZE or x.shape[-2] != IMAGE_SIZE:
        x = torch.nn.functional.interpolate(
            x, size=(IMAGE_SIZE, IMAGE_SIZE), mode="bilinear", align_corners=False
        )
    return x


def _elbo(recon, x, mu, logvar):
    recon_loss = torch.nn.functional.mse_loss(recon, x, reduction="sum") / x.shape[0]
    kl = -0.5 * torch.sum(1 + logvar - mu.pow(2) - logvar.exp()) / x.shape[0]
    return recon_loss + 0.1 * kl


def load_images(images_dir) -> np.ndarray:
    paths = list_images(images_dir)
    frames = []
    for path in paths:
        img = Image.open(path).convert("RGB")
        if img.size != (IMAGE_SIZE, IMAGE_SIZE):
            img = img.resize((IMAGE_SIZE, IMAGE_SIZE), Image.BILINEAR)
        frames.append(np.asarray(img))
    if not frames:
        raise DataError(f"no images found under {images_dir}")
    return np.stack(frames)


def train_vae(
    images_dir,
    latent_dim: int = 32,
    epochs: int = 10,
    seed: int = 0,
    out=None,
    batch_size: int = 32,
) -> tuple[ConvVAE, list[float]]:
    """Train on every image in the directory; returns (model, per-epoch loss)."""
    frames = load_images(images_dir)
    if frames.shape[0] < 100:
        raise DataError(f"VAE training needs >= 100 images, got {frames.shape[0]}")
    torch.manual_seed(seed)
    rng = np.random.default_rng(seed)
    model = ConvVAE(latent_dim)
    optimizer = torch.optim.Adam(model.parameters(), lr=1e-3)
    losses = []
    n = frames.shape[0]
    for _ in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        model.train()
        for start in range(0, n, batch_size):
            batch = _preprocess(frames[order[start:start + batch_size]])
            optimizer.zero_grad()
            recon, mu, logvar = model(batch)
            loss = _elbo(recon, batch, mu, logvar)
            loss.backward()
            optimizer.step()
            total += float(loss) * batch.shape[0]
        losses.append(total / n)
    if out is not None:
        save_vae(model, out)
    return model, losses


def save_vae(model: ConvVAE, path) -> None:
    torch.save({"latent_dim": model.latent_dim, "state_dict": model.state_dict()}, path)


def load_vae(path) -> ConvVAE:
    path = Path(path)
    if not path.exists():
        raise DataError(f"VAE weights not found: {path}")
    payload = torch.load(path, map_location="cpu", weights_only=True)
    model = ConvVAE(int(payload["latent_dim"]))
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model
