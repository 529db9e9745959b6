"""Image-quality metrics, path lengths and run reports."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ._validation import as_image, check_same_shape
from .exceptions import ImageTooSmall, ParseError
from .render import render, to_grayscale
from .types import CameraView, ImageBuffer, Scene

PSNR_CAP = 99.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB for images on ``[0, 1]``.

    Identical images (MSE below 1e-12) report the cap of 99 dB.
    """
    a, b = as_image(a), as_image(b)
    check_same_shape(a, b)
    mse = float(np.mean((a.pixels - b.pixels) ** 2))
    if mse < 1e-12:
        return PSNR_CAP
    return min(10.0 * np.log10(1.0 / mse), PSNR_CAP)


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    ax = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(ax**2) / (2.0 * sigma**2))
    w = np.outer(g, g)
    return w / w.sum()


def ssim(a, b) -> float:
    """Mean SSIM over every fully contained 11x11 Gaussian window (sigma 1.5).

    Colour inputs are reduced to luma first.
    """
    a, b = to_grayscale(as_image(a)), to_grayscale(as_image(b))
    check_same_shape(a, b)
    if a.width < SSIM_WINDOW or a.height < SSIM_WINDOW:
        raise ImageTooSmall(f"SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels")
    w = gaussian_window()
    x, y = a.as_array(), b.as_array()

    def filt(img):
        return np.einsum("ijkl,kl->ij", sliding_window_view(img, w.shape), w)

    mu_x, mu_y = filt(x), filt(y)
    sxx = filt(x * x) - mu_x**2
    syy = filt(y * y) - mu_y**2
    sxy = filt(x * y) - mu_x * mu_y
    num = (2 * mu_x * mu_y + SSIM_C1) * (2 * sxy + SSIM_C2)
    den = (mu_x**2 + mu_y**2 + SSIM_C1) * (sxx + syy + SSIM_C2)
    return float(np.clip(np.mean(num / den), -1.0, 1.0))


def trajectory_length(centers: Sequence) -> float:
    """Open-path length through ``centers`` in the given order."""
    pts = np.asarray(centers, dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        raise ValueError("need at least one center")
    if len(pts) == 1:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


# ------------------------------------------------------------------ reports

@dataclass
class CandidateScore:
    id: int
    median_frequency: float
    score: float


@dataclass
class StepReport:
    """One planner step. Fallback steps carry no radius or registration numbers."""

    step: int
    from_id: int
    chosen_id: int
    radius: Optional[float]
    candidates: list = field(default_factory=list)
    fallback: bool = False
    registration_rmsd: Optional[float] = None
    orientation_residual_deg: Optional[float] = None
    equivalent_iterations: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "StepReport":
        d = dict(d)
        d["candidates"] = [CandidateScore(**c) for c in d.get("candidates", [])]
        return cls(**d)


@dataclass
class RunReport:
    """Outcome of one planning run.

    ``lpips`` is always ``None`` here; the slot is kept so external tools can
    fill it in against the same schema.
    """

    dataset: str = ""
    status: str = "complete"
    initial_ids: list = field(default_factory=list)
    selected_ids: list = field(default_factory=list)
    test_ids: list = field(default_factory=list)
    per_step: list = field(default_factory=list)
    psnr_mean: Optional[float] = None
    ssim_mean: Optional[float] = None
    lpips_mean: Optional[float] = None
    per_view: list = field(default_factory=list)
    trajectory_length_selected: float = 0.0
    trajectory_length_full: float = 0.0
    trajectory_ratio: float = 0.0
    equivalent_iterations: int = 0
    config: dict = field(default_factory=dict)

    @property
    def visited_ids(self) -> list:
        return list(self.initial_ids) + list(self.selected_ids)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ParseError(f"unknown report fields: {sorted(unknown)}")
        d = dict(d)
        d["per_step"] = [StepReport.from_dict(s) for s in d.get("per_step", [])]
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls.from_dict(json.loads(text))


def write_report(report: RunReport, path):
    Path(path).write_text(report.to_json())


def read_report(path) -> RunReport:
    try:
        return RunReport.from_json(Path(path).read_text())
    except (json.JSONDecodeError, TypeError) as exc:
        raise ParseError(f"invalid report: {exc}", path=path) from exc


def write_steps_csv(report: RunReport, path):
    """One row per scored candidate: step, candidate_id, median_frequency, chosen."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "candidate_id", "median_frequency", "chosen"])
        for s in report.per_step:
            for c in s.candidates:
                w.writerow([s.step, c.id, repr(float(c.median_frequency)), int(c.id == s.chosen_id)])


def evaluate(run: RunReport, truth: Scene, proxy: Scene, test_views: Sequence[CameraView]) -> RunReport:
    """Fill mean PSNR/SSIM of ``proxy`` against ``truth`` over ``test_views``."""
    visited = set(run.visited_ids)
    clash = [v.id for v in test_views if v.id in visited]
    if clash:
        raise ValueError(f"test views overlap visited views: {clash}")
    per_view = []
    for v in test_views:
        gt, est = render(truth, v), render(proxy, v)
        per_view.append({"id": v.id, "psnr": psnr(gt, est), "ssim": ssim(gt, est)})
    if not per_view:
        return replace(run, per_view=[], psnr_mean=None, ssim_mean=None)
    return replace(
        run,
        per_view=per_view,
        psnr_mean=float(np.mean([p["psnr"] for p in per_view])),
        ssim_mean=float(np.mean([p["ssim"] for p in per_view])),
    )


# ---------------------------------------------------------------------- PPM

def to_bytes(img: ImageBuffer) -> np.ndarray:
    """8-bit quantisation: ``round(value * 255)`` with halves rounded up."""
    return np.clip(np.floor(img.pixels * 255.0 + 0.5), 0, 255).astype(np.uint8)


def write_ppm(img, path):
    """Binary P6 file; grayscale input is replicated across RGB."""
    img = as_image(img)
    data = to_bytes(img)
    if data.shape[2] == 1:
        data = np.repeat(data, 3, axis=2)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{img.width} {img.height}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(data).tobytes())


def _ppm_tokens(buf: bytes, count: int):
    tokens, pos = [], 2
    while len(tokens) < count:
        while pos < len(buf) and buf[pos : pos + 1].isspace():
            pos += 1
        if buf[pos : pos + 1] == b"#":
            while pos < len(buf) and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ParseError("truncated PPM header")
        tokens.append(buf[start:pos])
    return tokens, pos + 1


def read_ppm(path) -> ImageBuffer:
    """Read a binary PPM (P6) or PGM (P5) with maxval <= 255."""
    buf = Path(path).read_bytes()
    magic = buf[:2]
    if magic not in (b"P6", b"P5"):
        raise ParseError(f"not a binary PPM/PGM file (magic {magic!r})", path=path)
    try:
        (w, h, maxval), offset = _ppm_tokens(buf, 3)
        w, h, maxval = int(w), int(h), int(maxval)
    except (ValueError, IndexError) as exc:
        raise ParseError(f"bad PPM header: {exc}", path=path) from exc
    if not 0 < maxval < 256:
        raise ParseError("only 8-bit PPM files are supported", path=path)
    channels = 3 if magic == b"P6" else 1
    n = w * h * channels
    data = np.frombuffer(buf, dtype=np.uint8, count=n, offset=offset) if len(buf) - offset >= n else None
    if data is None:
        raise ParseError("truncated PPM pixel data", path=path)
    return ImageBuffer(data.reshape(h, w, channels).astype(np.float64) / maxval)
