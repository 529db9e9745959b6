"""Frequency-domain sharpness score for rendered views.

A blurry or artifact-ridden render concentrates its spectral energy at low
radial frequencies, so the magnitude-weighted median radial frequency of the
image spectrum drops. Lower scores mean a view the current model renders
poorly.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import as_image, check_gray_image
from .exceptions import EmptyCandidates, ZeroSpectrum
from .render import to_grayscale
from .types import ImageBuffer

MAX_RADIAL = 0.5 * np.sqrt(2.0)
SCORE_MODES = ("weighted-radial-median", "magnitude-median")
WINDOWS = ("none", "hann")
_ZERO_TOL = 1e-12
# relative slack on the half-mass test so exact ties are not decided by rounding
_HALF_SLACK = 1e-12


@dataclass(frozen=True)
class SpectrumSummary:
    """Radial histogram of spectral magnitude plus its weighted median.

    ``score`` is what candidates are ranked by. It equals ``median_frequency``
    in the default mode and the median spectral magnitude in
    ``magnitude-median`` mode.
    """

    median_frequency: float
    total_magnitude: float
    bin_centers: np.ndarray
    bin_magnitudes: np.ndarray
    score: float = None

    def __post_init__(self):
        if self.score is None:
            object.__setattr__(self, "score", self.median_frequency)

    @property
    def histogram(self) -> list[tuple[float, float]]:
        return list(zip(self.bin_centers.tolist(), self.bin_magnitudes.tolist()))

    @classmethod
    def zero(cls, n_bins: int = 64) -> "SpectrumSummary":
        """Stand-in for a featureless image: the least informative score."""
        centers, _ = radial_bins(n_bins)
        return cls(0.0, 0.0, centers, np.zeros(n_bins), 0.0)


def radial_bins(n_bins: int = 64):
    """Bin centres and width for ``n_bins`` uniform bins on ``[0, sqrt(2)/2]``."""
    width = MAX_RADIAL / n_bins
    return (np.arange(n_bins) + 0.5) * width, width


def radial_frequency(height: int, width: int) -> np.ndarray:
    """Radial frequency in cycles/pixel of every DFT bin, unshifted layout."""
    fu = np.fft.fftfreq(width)
    fv = np.fft.fftfreq(height)
    return np.sqrt(fu[None, :] ** 2 + fv[:, None] ** 2)


def magnitude_spectrum(img, window: str = "none") -> np.ndarray:
    """``|DFT|`` of the mean-subtracted image, unshifted, same shape as the input.

    Raises :class:`~freqnbv.exceptions.ImageTooSmall` below 8x8.
    """
    if window not in WINDOWS:
        raise ValueError(f"window must be one of {WINDOWS}, got {window!r}")
    x = check_gray_image(img, min_size=8)
    x = x - x.mean()
    if window == "hann":
        h, w = x.shape
        x = x * np.outer(np.hanning(h), np.hanning(w))
        x = x - x.mean()
    spec = np.abs(np.fft.fft2(x))
    spec[0, 0] = 0.0
    return spec


def score_view(img, n_bins: int = 64, mode: str = "weighted-radial-median",
               window: str = "none") -> SpectrumSummary:
    """Summarise the spectrum of a grayscale image.

    Every DFT bin contributes its magnitude to the radial bin of
    ``sqrt((u/W)^2 + (v/H)^2)``; the median frequency is the centre of the
    first radial bin whose cumulative magnitude reaches half the total.

    Raises
    ------
    ZeroSpectrum
        The image is constant, so there is nothing outside the DC bin.
    """
    if mode not in SCORE_MODES:
        raise ValueError(f"mode must be one of {SCORE_MODES}, got {mode!r}")
    spec = magnitude_spectrum(img, window=window)
    rho = radial_frequency(*spec.shape)
    centers, width = radial_bins(n_bins)
    idx = np.minimum((rho / width).astype(np.int64), n_bins - 1)
    mags = np.bincount(idx.ravel(), weights=spec.ravel(), minlength=n_bins)
    total = float(spec.sum())
    if total < _ZERO_TOL:
        raise ZeroSpectrum("image has no energy outside the DC bin")
    cum = np.cumsum(mags)
    k = int(np.searchsorted(cum, 0.5 * total * (1.0 - _HALF_SLACK), side="left"))
    k = min(k, n_bins - 1)
    median = float(centers[k])
    score = median
    if mode == "magnitude-median":
        nondc = np.delete(spec.ravel(), 0)
        score = float(np.median(nondc))
    return SpectrumSummary(median, total, centers, mags, score)


def safe_score(img, **kwargs) -> SpectrumSummary:
    """:func:`score_view`, mapping a featureless image to a zero score."""
    try:
        return score_view(img, **kwargs)
    except ZeroSpectrum:
        return SpectrumSummary.zero(kwargs.get("n_bins", 64))


def rank_candidates(scores: Iterable[tuple[int, SpectrumSummary]]) -> int:
    """Id of the lowest-scoring candidate; ties go to the smaller id."""
    scores = list(scores)
    if not scores:
        raise EmptyCandidates("no candidates to rank")
    return min(scores, key=lambda item: (item[1].score, item[0]))[0]


def gaussian_blur(img, sigma: float) -> ImageBuffer:
    """Periodic Gaussian blur applied as a product in the frequency domain.

    The transfer function ``exp(-2 pi^2 sigma^2 rho^2)`` falls monotonically
    with radial frequency. ``sigma == 0`` returns the image unchanged.
    """
    img = as_image(img)
    if sigma == 0:
        return img
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    px = img.pixels
    h, w = px.shape[:2]
    rho2 = radial_frequency(h, w) ** 2
    gain = np.exp(-2.0 * np.pi**2 * sigma**2 * rho2)
    out = np.fft.ifft2(np.fft.fft2(px, axes=(0, 1)) * gain[:, :, None], axes=(0, 1)).real
    return ImageBuffer(np.clip(out, 0.0, 1.0))


def write_histogram_csv(path, summary: SpectrumSummary):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bin_center", "magnitude"])
        for c, m in summary.histogram:
            writer.writerow([repr(c), repr(m)])


class FrequencyScorer(TransformerMixin, BaseEstimator):
    """Score images by their median spectral frequency.

    Stateless: ``fit`` only validates parameters. ``transform`` maps a sequence
    of images (``ImageBuffer`` or arrays; colour is converted to luma) to an
    ``(n, 1)`` array of scores.

    Parameters
    ----------
    n_bins : int, default=64
        Number of radial histogram bins.
    mode : {"weighted-radial-median", "magnitude-median"}
    window : {"none", "hann"}
    """

    def __init__(self, n_bins=64, mode="weighted-radial-median", window="none"):
        self.n_bins = n_bins
        self.mode = mode
        self.window = window

    def _validate_params(self):
        if int(self.n_bins) < 1:
            raise ValueError("n_bins must be positive")
        if self.mode not in SCORE_MODES:
            raise ValueError(f"mode must be one of {SCORE_MODES}")
        if self.window not in WINDOWS:
            raise ValueError(f"window must be one of {WINDOWS}")

    def fit(self, X=None, y=None):
        self._validate_params()
        return self

    def summarize(self, img) -> SpectrumSummary:
        self._validate_params()
        return safe_score(to_grayscale(as_image(img)), n_bins=int(self.n_bins),
                          mode=self.mode, window=self.window)

    def transform(self, X: Sequence) -> np.ndarray:
        return np.array([[self.summarize(img).score] for img in X], dtype=np.float64)

    def select(self, images: dict) -> int:
        """Key of the image with the lowest score (ties: smallest key)."""
        return rank_candidates((k, self.summarize(v)) for k, v in images.items())
