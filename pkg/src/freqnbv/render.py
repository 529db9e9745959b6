"""CPU splat rasteriser.

Gaussians are projected to 2D with the local affine (EWA) approximation,
sorted globally by depth and alpha-composited front to back. Pixel ``(x, y)``
samples image-plane coordinate ``(x, y)``, so the principal point addresses
pixel centres directly.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .types import CameraView, Gaussian3D, ImageBuffer, Scene, covariance_of

LOWPASS = 0.3
ALPHA_MAX = 0.99
NEAR_PLANE = 0.01
CUTOFF_SIGMA = 3.0


@dataclass(frozen=True)
class ProjectedSplat:
    mean2d: np.ndarray
    cov2d: np.ndarray
    depth: float
    opacity: float
    color: np.ndarray
    index: int = 0

    @property
    def conic(self) -> np.ndarray:
        return np.linalg.inv(self.cov2d)


def _jacobians(p_cam, fx, fy):
    x, y, z = p_cam[..., 0], p_cam[..., 1], p_cam[..., 2]
    J = np.zeros(p_cam.shape[:-1] + (2, 3))
    J[..., 0, 0] = fx / z
    J[..., 0, 2] = -fx * x / (z * z)
    J[..., 1, 1] = fy / z
    J[..., 1, 2] = -fy * y / (z * z)
    return J


def project_gaussian(g: Gaussian3D, view: CameraView, index: int = 0) -> Optional[ProjectedSplat]:
    """Project one Gaussian; ``None`` when it sits at or behind the near plane."""
    p = view.rotation_wc @ g.mean + view.translation_wc
    if p[2] <= NEAR_PLANE:
        return None
    J = _jacobians(p, view.fx, view.fy)
    W = view.rotation_wc
    cov2d = J @ W @ covariance_of(g) @ W.T @ J.T + LOWPASS * np.eye(2)
    cov2d = 0.5 * (cov2d + cov2d.T)
    mean2d = np.array([view.fx * p[0] / p[2] + view.cx, view.fy * p[1] / p[2] + view.cy])
    return ProjectedSplat(mean2d, cov2d, float(p[2]), g.opacity, g.color.copy(), index)


def project_scene(scene: Scene, view: CameraView) -> dict:
    """Vectorised projection of every Gaussian in front of the near plane.

    Returns a dict of arrays (``index``, ``mean2d``, ``cov2d``, ``depth``,
    ``opacity``, ``color``) restricted to the surviving Gaussians, in the
    scene's list order.
    """
    a = scene.arrays()
    W = view.rotation_wc
    p = a["means"] @ W.T + view.translation_wc
    keep = np.flatnonzero(p[:, 2] > NEAR_PLANE)
    p = p[keep]
    cov3 = scene.covariances()[keep]
    J = _jacobians(p, view.fx, view.fy)
    T = J @ W
    cov2d = T @ cov3 @ np.swapaxes(T, 1, 2) + LOWPASS * np.eye(2)
    cov2d = 0.5 * (cov2d + np.swapaxes(cov2d, 1, 2))
    z = p[:, 2]
    mean2d = np.stack([view.fx * p[:, 0] / z + view.cx, view.fy * p[:, 1] / z + view.cy], axis=1)
    return {
        "index": keep,
        "mean2d": mean2d,
        "cov2d": cov2d,
        "depth": z,
        "opacity": a["opacities"][keep],
        "color": a["colors"][keep],
    }


def depth_order(depth: np.ndarray, index: np.ndarray) -> np.ndarray:
    """Front-to-back order; equal depths fall back to the original list index."""
    return np.lexsort((index, depth))


def composite(proj: dict, width: int, height: int, background) -> tuple[np.ndarray, np.ndarray]:
    """Alpha-composite projected splats.

    Returns the ``(H, W, 3)`` colour image and the ``(H, W)`` transmittance left
    after the last splat (before the background is added).
    """
    color = np.zeros((height, width, 3))
    trans = np.ones((height, width))
    order = depth_order(proj["depth"], proj["index"])
    cutoff2 = CUTOFF_SIGMA**2
    for k in order:
        mx, my = proj["mean2d"][k]
        (a, b), (_, c) = proj["cov2d"][k]
        # the 3-sigma ellipse is enclosed by this axis-aligned box
        rx, ry = CUTOFF_SIGMA * np.sqrt(a), CUTOFF_SIGMA * np.sqrt(c)
        x0, x1 = max(int(np.ceil(mx - rx)), 0), min(int(np.floor(mx + rx)), width - 1)
        y0, y1 = max(int(np.ceil(my - ry)), 0), min(int(np.floor(my + ry)), height - 1)
        if x0 > x1 or y0 > y1:
            continue
        det = a * c - b * b
        dx = np.arange(x0, x1 + 1) - mx
        dy = (np.arange(y0, y1 + 1) - my)[:, None]
        maha = (c * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det
        alpha = np.minimum(proj["opacity"][k] * np.exp(-0.5 * maha), ALPHA_MAX)
        alpha[maha > cutoff2] = 0.0
        T = trans[y0 : y1 + 1, x0 : x1 + 1]
        color[y0 : y1 + 1, x0 : x1 + 1] += (alpha * T)[:, :, None] * proj["color"][k]
        trans[y0 : y1 + 1, x0 : x1 + 1] = T * (1.0 - alpha)
    return color, trans


def _finish(color, trans, background) -> np.ndarray:
    out = color + trans[:, :, None] * np.asarray(background, dtype=np.float64)
    # compositing stays inside [0, 1] analytically; clip away rounding only
    return np.clip(out, 0.0, 1.0)


def render(scene: Scene, view: CameraView) -> ImageBuffer:
    """Render ``scene`` from ``view`` as an RGB :class:`ImageBuffer`."""
    proj = project_scene(scene, view)
    color, trans = composite(proj, view.width, view.height, scene.background_color)
    return ImageBuffer(_finish(color, trans, scene.background_color))


def to_grayscale(img: ImageBuffer) -> ImageBuffer:
    if img.channels == 1:
        return img
    px = img.pixels
    luma = 0.299 * px[:, :, 0] + 0.587 * px[:, :, 1] + 0.114 * px[:, :, 2]
    return ImageBuffer(np.clip(luma, 0.0, 1.0))


def render_grayscale(scene: Scene, view: CameraView) -> ImageBuffer:
    return to_grayscale(render(scene, view))
