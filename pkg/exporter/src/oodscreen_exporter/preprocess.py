"""Deterministic image preprocessing: crop, resize, normalize.

The pipeline is fixed: center-crop to the largest square, bilinear-resize
to ``side`` x ``side``, scale to [0, 1], then channelwise ``(x - mean) / std``.
No augmentation — exports must be reproducible byte for byte. Grayscale
and palette images are converted to RGB (channel replication) before
normalization.
"""

from __future__ import annotations

import numpy as np
from PIL import Image


def center_square_crop(image: Image.Image) -> Image.Image:
    """Crop to the largest centered square (identity for square input)."""
    width, height = image.size
    side = min(width, height)
    left = (width - side) // 2
    top = (height - side) // 2
    if (width, height) == (side, side):
        return image
    return image.crop((left, top, left + side, top + side))


def preprocess(image: Image.Image, side: int = 256,
               mean: tuple[float, float, float] = (0.485, 0.456, 0.406),
               std: tuple[float, float, float] = (0.229, 0.224, 0.225)) -> np.ndarray:
    """Image -> float32 array of shape ``(3, side, side)``, normalized."""
    rgb = image.convert("RGB")
    square = center_square_crop(rgb)
    if square.size != (side, side):
        square = square.resize((side, side), Image.Resampling.BILINEAR)
    pixels = np.asarray(square, dtype=np.float32) / np.float32(255.0)
    pixels = (pixels - np.asarray(mean, dtype=np.float32)) / np.asarray(
        std, dtype=np.float32)
    return np.ascontiguousarray(pixels.transpose(2, 0, 1))


def preprocess_file(path, side: int = 256,
                    mean: tuple[float, float, float] = (0.485, 0.456, 0.406),
                    std: tuple[float, float, float] = (0.229, 0.224, 0.225),
                    ) -> np.ndarray:
    """Decode and preprocess one file. Raises ``OSError`` family on failure."""
    with Image.open(path) as image:
        return preprocess(image, side=side, mean=mean, std=std)
