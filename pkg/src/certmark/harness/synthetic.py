"""Seeded smooth random fields standing in for a real image corpus.

Each image mixes a coarse Gaussian-filtered field with fine-grain texture so
that 8x8 windows carry some local variance, as natural images do.
"""
from __future__ import annotations

import os

import numpy as np
from scipy.ndimage import gaussian_filter

from ..core import ImageTensor
from ..imageio import save_image

FINE_WEIGHT = 0.6   # share of variance in the fine-grain component


def _unit(a: np.ndarray) -> np.ndarray:
    return (a - a.mean()) / max(a.std(), 1e-12)


def smooth_field(rng: np.random.Generator, size: int = 32, channels: int = 1) -> ImageTensor:
    if not 32 <= size <= 128:
        raise ValueError("size must lie in [32, 128]")
    if channels not in (1, 3):
        raise ValueError("channels must be 1 or 3")
    width = rng.uniform(1.5, 4.0) * size / 32
    coarse = _unit(gaussian_filter(rng.random((channels, size, size)), (0, width, width), mode="wrap"))
    fine = _unit(gaussian_filter(rng.random((channels, size, size)), (0, 0.7, 0.7), mode="wrap"))
    raw = np.sqrt(1.0 - FINE_WEIGHT) * coarse + np.sqrt(FINE_WEIGHT) * fine
    img = rng.uniform(0.4, 0.6) + rng.uniform(0.1, 0.18) * raw
    return ImageTensor(np.clip(img, 0.0, 1.0))


def synthetic_images(count: int, seed: int = 0, size: int = 32, channels: int = 1) -> list[ImageTensor]:
    rng = np.random.default_rng(seed)
    return [smooth_field(rng, size, channels) for _ in range(count)]


def write_corpus(directory, count: int, seed: int = 0, size: int = 32, channels: int = 1,
                 ext: str | None = None) -> list[str]:
    """Write ``count`` images as ``img0000.pgm`` (or ``.ppm``); returns the paths."""
    os.makedirs(directory, exist_ok=True)
    ext = ext or (".pgm" if channels == 1 else ".ppm")
    paths = []
    for i, img in enumerate(synthetic_images(count, seed, size, channels)):
        path = os.path.join(directory, f"img{i:04d}{ext}")
        save_image(img, path)
        paths.append(path)
    return paths
