"""Input validation helpers shared by the estimators."""
from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import DegenerateInput, DimensionMismatch, ImageTooSmall
from .types import ImageBuffer


def check_points(X, min_points: int = 1) -> np.ndarray:
    """Coerce to a finite float ``(n, 3)`` array."""
    X = check_array(X, dtype=np.float64, ensure_2d=True, ensure_min_samples=1)
    if X.shape[1] != 3:
        raise ValueError(f"expected points with 3 coordinates, got {X.shape[1]}")
    if len(X) < min_points:
        raise DegenerateInput(f"need at least {min_points} points, got {len(X)}")
    return X


def check_matched_points(X, Y, min_points: int = 1):
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim == 2 and Y.ndim == 2 and len(X) != len(Y):
        raise ValueError(f"point sets differ in length: {len(X)} vs {len(Y)}")
    if X.ndim == 2 and len(X) < min_points:
        raise DegenerateInput(f"need at least {min_points} matched points, got {len(X)}")
    return check_points(X, min_points), check_points(Y, min_points)


def as_image(img) -> ImageBuffer:
    return img if isinstance(img, ImageBuffer) else ImageBuffer(img)


def check_gray_image(img, min_size: int = 8) -> np.ndarray:
    """``(H, W)`` array of a single-channel image at least ``min_size`` square."""
    img = as_image(img)
    if img.channels != 1:
        raise ValueError("expected a single-channel image")
    if img.width < min_size or img.height < min_size:
        raise ImageTooSmall(
            f"image is {img.width}x{img.height}; at least {min_size}x{min_size} required"
        )
    return img.as_array()


def check_same_shape(a: ImageBuffer, b: ImageBuffer):
    if a.pixels.shape != b.pixels.shape:
        raise DimensionMismatch(
            f"image shapes differ: {a.pixels.shape} vs {b.pixels.shape}"
        )
