"""Deterministic stand-in for incremental Gaussian-splat training.

Each ground-truth Gaussian is degraded according to how many visited views
see it: under-observed Gaussians are inflated (blurry), faded and tinted with
seeded colour noise, while Gaussians seen often enough come back exact.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .render import CUTOFF_SIGMA, project_scene
from .types import CameraView, Gaussian3D, Scene

INITIAL_ITERATIONS = 1000
ITERATIONS_PER_VIEW = 100


@dataclass(frozen=True)
class ProxyConfig:
    blur_scale_base: float = 4.0
    maturity_count: int = 3
    opacity_floor: float = 0.3
    noise_seed: int = 0
    noise_amplitude: float = 0.1

    def __post_init__(self):
        if not self.blur_scale_base > 1:
            raise ValueError("blur_scale_base must be > 1")
        if int(self.maturity_count) < 1:
            raise ValueError("maturity_count must be >= 1")
        if not 0.0 <= self.opacity_floor <= 1.0:
            raise ValueError("opacity_floor must lie in [0, 1]")
        if self.noise_amplitude < 0:
            raise ValueError("noise_amplitude must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ObservationRecord:
    gaussian_index: int
    observation_count: int
    first_observed_step: Optional[int]


def equivalent_iterations(n_selected: int) -> int:
    """Training iterations the real pipeline would have run; bookkeeping only."""
    return INITIAL_ITERATIONS + ITERATIONS_PER_VIEW * n_selected


def visibility_mask(scene: Scene, view: CameraView) -> np.ndarray:
    """Boolean per Gaussian: projected mean within the image grown by 3 sigma."""
    mask = np.zeros(len(scene), dtype=bool)
    if len(scene) == 0:
        return mask
    proj = project_scene(scene, view)
    mx, my = proj["mean2d"][:, 0], proj["mean2d"][:, 1]
    sx = CUTOFF_SIGMA * np.sqrt(proj["cov2d"][:, 0, 0])
    sy = CUTOFF_SIGMA * np.sqrt(proj["cov2d"][:, 1, 1])
    inside = (
        (mx >= -sx) & (mx <= view.width - 1 + sx) & (my >= -sy) & (my <= view.height - 1 + sy)
    )
    mask[proj["index"][inside]] = True
    return mask


def visibility(g: Gaussian3D, view: CameraView) -> bool:
    return bool(visibility_mask(Scene([g]), view)[0])


def observation_records(truth: Scene, visited: Sequence[CameraView]) -> list[ObservationRecord]:
    """Per-Gaussian observation counts; step ``k`` is the k-th visited view."""
    n = len(truth)
    counts = np.zeros(n, dtype=np.int64)
    first = np.full(n, -1, dtype=np.int64)
    for step, view in enumerate(visited):
        seen = visibility_mask(truth, view)
        first[seen & (first < 0)] = step
        counts += seen
    return [
        ObservationRecord(i, int(counts[i]), int(first[i]) if first[i] >= 0 else None)
        for i in range(n)
    ]


def maturity(records: Sequence[ObservationRecord], cfg: ProxyConfig) -> np.ndarray:
    counts = np.array([r.observation_count for r in records], dtype=np.float64)
    return np.minimum(counts / cfg.maturity_count, 1.0)


def color_noise(cfg: ProxyConfig, index: int) -> np.ndarray:
    """Zero-mean colour perturbation, reproducible per ``(noise_seed, index)``."""
    rng = np.random.default_rng([int(cfg.noise_seed) & 0xFFFFFFFF, int(index)])
    return rng.uniform(-cfg.noise_amplitude, cfg.noise_amplitude, size=3)


def build_model(truth: Scene, visited: Sequence[CameraView], cfg: ProxyConfig = ProxyConfig()) -> Scene:
    """The "current reconstruction" given the views visited so far.

    With maturity ``m = min(count / maturity_count, 1)`` each Gaussian gets
    ``scale * base**(1 - m)``, ``opacity * max(m, floor)`` and colour noise
    scaled by ``1 - m`` (clipped to ``[0, 1]``).
    """
    if len(truth) == 0:
        raise ValueError("truth scene must contain at least one Gaussian")
    m = maturity(observation_records(truth, visited), cfg)
    out = []
    for i, (g, mi) in enumerate(zip(truth.gaussians, m)):
        if mi >= 1.0:
            out.append(g)
            continue
        deficit = 1.0 - mi
        color = np.clip(g.color + deficit * color_noise(cfg, i), 0.0, 1.0)
        out.append(
            Gaussian3D(
                g.mean,
                g.scale * cfg.blur_scale_base**deficit,
                g.rotation,
                g.opacity * max(mi, cfg.opacity_floor),
                color,
            )
        )
    return Scene(out, truth.background_color)
