"""Domain value types and geometric conventions.

Poses follow the COLMAP convention: ``x_cam = R_wc @ x_world + t_wc`` with the
camera looking down +z, x to the right and y down. Quaternions are stored
scalar-first ``(w, x, y, z)``. Colours and pixels live in ``[0, 1]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

_UNIT_TOL = 1e-15
_ORTHO_TOL = 1e-9


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    arr.setflags(write=False)
    return arr


def quat_to_rotmat(q) -> np.ndarray:
    """Rotation matrix of a scalar-first quaternion (normalised first)."""
    w, x, y, z = np.asarray(q, dtype=np.float64) / np.linalg.norm(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quats_to_rotmats(q: np.ndarray) -> np.ndarray:
    """Vectorised :func:`quat_to_rotmat` for an ``(n, 4)`` array."""
    q = np.asarray(q, dtype=np.float64)
    q = q / np.linalg.norm(q, axis=1, keepdims=True)
    w, x, y, z = q.T
    out = np.empty((len(q), 3, 3))
    out[:, 0, 0] = 1 - 2 * (y * y + z * z)
    out[:, 0, 1] = 2 * (x * y - w * z)
    out[:, 0, 2] = 2 * (x * z + w * y)
    out[:, 1, 0] = 2 * (x * y + w * z)
    out[:, 1, 1] = 1 - 2 * (x * x + z * z)
    out[:, 1, 2] = 2 * (y * z - w * x)
    out[:, 2, 0] = 2 * (x * z - w * y)
    out[:, 2, 1] = 2 * (y * z + w * x)
    out[:, 2, 2] = 1 - 2 * (x * x + y * y)
    return out


def rotmat_to_quat(R) -> np.ndarray:
    """Scalar-first unit quaternion with ``w >= 0`` for a rotation matrix."""
    R = np.asarray(R, dtype=np.float64)
    tr = np.trace(R)
    if tr > 0:
        s = 2.0 * np.sqrt(tr + 1.0)
        q = [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s]
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = 2.0 * np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
        q = [(R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s]
    elif R[1, 1] > R[2, 2]:
        s = 2.0 * np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2])
        q = [(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s]
    else:
        s = 2.0 * np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1])
        q = [(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s]
    q = np.array(q)
    q /= np.linalg.norm(q)
    return -q if q[0] < 0 else q


def quat_multiply(a, b) -> np.ndarray:
    """Hamilton product ``a * b`` (rotation ``b`` first, then ``a``)."""
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ]
    )


def check_rotation(R, name="rotation", tol=_ORTHO_TOL) -> np.ndarray:
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        raise ValueError(f"{name} must be a finite 3x3 matrix")
    if np.max(np.abs(R @ R.T - np.eye(3))) > tol:
        raise ValueError(f"{name} is not orthonormal")
    if abs(np.linalg.det(R) - 1.0) > tol:
        raise ValueError(f"{name} must have determinant +1")
    return R


@dataclass(frozen=True, eq=False)
class Gaussian3D:
    """One anisotropic splat.

    ``scale`` holds per-axis standard deviations, ``rotation`` the orientation
    of the principal axes as a scalar-first quaternion; it is normalised on
    construction.
    """

    mean: np.ndarray
    scale: np.ndarray
    rotation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    opacity: float = 1.0
    color: np.ndarray = field(default_factory=lambda: np.ones(3))

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        scale = np.asarray(self.scale, dtype=np.float64)
        q = np.asarray(self.rotation, dtype=np.float64)
        color = np.asarray(self.color, dtype=np.float64)
        if mean.shape != (3,) or not np.all(np.isfinite(mean)):
            raise ValueError("mean must be a finite 3-vector")
        if scale.shape != (3,) or not np.all(scale > 0) or not np.all(np.isfinite(scale)):
            raise ValueError("scale components must be finite and > 0")
        if q.shape != (4,) or not np.isfinite(q).all() or np.linalg.norm(q) == 0:
            raise ValueError("rotation must be a nonzero quaternion (w, x, y, z)")
        if color.shape != (3,) or np.any(color < 0) or np.any(color > 1):
            raise ValueError("color must be an RGB triple in [0, 1]")
        if not 0.0 <= float(self.opacity) <= 1.0:
            raise ValueError("opacity must lie in [0, 1]")
        object.__setattr__(self, "mean", _frozen(mean))
        object.__setattr__(self, "scale", _frozen(scale))
        norm = np.linalg.norm(q)
        # leave unit quaternions bit-for-bit alone so serialisation round-trips exactly
        if abs(norm - 1.0) > _UNIT_TOL:
            q = q / norm
        object.__setattr__(self, "rotation", _frozen(q))
        object.__setattr__(self, "color", _frozen(color))
        object.__setattr__(self, "opacity", float(self.opacity))

    def __eq__(self, other):
        if not isinstance(other, Gaussian3D):
            return NotImplemented
        return (
            np.array_equal(self.mean, other.mean)
            and np.array_equal(self.scale, other.scale)
            and np.array_equal(self.rotation, other.rotation)
            and self.opacity == other.opacity
            and np.array_equal(self.color, other.color)
        )

    __hash__ = None


def covariance_of(g: Gaussian3D) -> np.ndarray:
    """World-space covariance ``R diag(scale**2) R^T``."""
    R = quat_to_rotmat(g.rotation)
    cov = (R * g.scale**2) @ R.T
    return 0.5 * (cov + cov.T)


@dataclass(frozen=True, eq=False)
class CameraView:
    id: int
    rotation_wc: np.ndarray
    translation_wc: np.ndarray
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        R = check_rotation(self.rotation_wc, "rotation_wc")
        t = np.asarray(self.translation_wc, dtype=np.float64)
        if t.shape != (3,) or not np.all(np.isfinite(t)):
            raise ValueError("translation_wc must be a finite 3-vector")
        if int(self.width) <= 0 or int(self.height) <= 0:
            raise ValueError("image dimensions must be positive")
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        object.__setattr__(self, "rotation_wc", _frozen(R))
        object.__setattr__(self, "translation_wc", _frozen(t))
        object.__setattr__(self, "id", int(self.id))
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))
        for name in ("fx", "fy", "cx", "cy"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def center(self) -> np.ndarray:
        return camera_center(self)

    def with_id(self, new_id: int) -> "CameraView":
        return CameraView(new_id, self.rotation_wc, self.translation_wc, self.fx, self.fy,
                          self.cx, self.cy, self.width, self.height)

    def __eq__(self, other):
        if not isinstance(other, CameraView):
            return NotImplemented
        return (
            self.id == other.id
            and np.array_equal(self.rotation_wc, other.rotation_wc)
            and np.array_equal(self.translation_wc, other.translation_wc)
            and (self.fx, self.fy, self.cx, self.cy, self.width, self.height)
            == (other.fx, other.fy, other.cx, other.cy, other.width, other.height)
        )

    __hash__ = None


def camera_center(view: CameraView) -> np.ndarray:
    """World position of the camera, ``-R^T t``."""
    return -view.rotation_wc.T @ view.translation_wc


def look_at(eye, target, up=(0.0, 0.0, 1.0)):
    """World->camera ``(R, t)`` for a camera at ``eye`` looking at ``target``.

    Falls back to the world y axis as ``up`` when the viewing direction is
    parallel to ``up``.
    """
    eye = np.asarray(eye, dtype=np.float64)
    forward = np.asarray(target, dtype=np.float64) - eye
    forward /= np.linalg.norm(forward)
    up = np.asarray(up, dtype=np.float64)
    right = np.cross(forward, up)
    if np.linalg.norm(right) < 1e-9:
        right = np.cross(forward, [0.0, 1.0, 0.0])
    right /= np.linalg.norm(right)
    down = np.cross(forward, right)
    R = np.stack([right, down, forward])
    return R, -R @ eye


@dataclass(frozen=True, eq=False)
class ImageBuffer:
    """Raster image with values in ``[0, 1]``.

    ``pixels`` is stored as a read-only ``(height, width, channels)`` array;
    flattening it in C order gives the row-major layout.
    """

    pixels: np.ndarray

    def __post_init__(self):
        px = np.array(self.pixels, dtype=np.float64)
        if px.ndim == 2:
            px = px[:, :, None]
        if px.ndim != 3 or px.shape[2] not in (1, 3) or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("pixels must have shape (H, W), (H, W, 1) or (H, W, 3)")
        if not np.all(np.isfinite(px)) or px.min() < 0.0 or px.max() > 1.0:
            raise ValueError("pixel values must be finite and lie in [0, 1]")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @classmethod
    def from_flat(cls, values: Sequence[float], width: int, height: int, channels: int = 1):
        values = np.asarray(values, dtype=np.float64)
        if values.size != width * height * channels:
            raise ValueError(
                f"expected {width * height * channels} values, got {values.size}"
            )
        return cls(values.reshape(height, width, channels))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @property
    def flat(self) -> np.ndarray:
        return self.pixels.reshape(-1)

    def as_array(self) -> np.ndarray:
        """``(H, W)`` for grayscale, ``(H, W, 3)`` for colour."""
        return self.pixels[:, :, 0] if self.channels == 1 else self.pixels

    def __eq__(self, other):
        if not isinstance(other, ImageBuffer):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class SimilarityTransform:
    """``p -> scale * rotation @ p + translation``."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    scale: float = 1.0
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = check_rotation(self.rotation)
        t = np.asarray(self.translation, dtype=np.float64)
        if t.shape != (3,) or not np.all(np.isfinite(t)):
            raise ValueError("translation must be a finite 3-vector")
        if not float(self.scale) > 0 or not np.isfinite(self.scale):
            raise ValueError("scale must be positive")
        object.__setattr__(self, "rotation", _frozen(R))
        object.__setattr__(self, "translation", _frozen(t))
        object.__setattr__(self, "scale", float(self.scale))

    @classmethod
    def identity(cls) -> "SimilarityTransform":
        return cls()

    def as_matrix(self) -> np.ndarray:
        M = np.eye(4)
        M[:3, :3] = self.scale * self.rotation
        M[:3, 3] = self.translation
        return M

    def __eq__(self, other):
        if not isinstance(other, SimilarityTransform):
            return NotImplemented
        return (
            np.array_equal(self.rotation, other.rotation)
            and self.scale == other.scale
            and np.array_equal(self.translation, other.translation)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Scene:
    gaussians: tuple = ()
    background_color: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        gs = tuple(self.gaussians)
        if not all(isinstance(g, Gaussian3D) for g in gs):
            raise TypeError("gaussians must be Gaussian3D instances")
        bg = np.asarray(self.background_color, dtype=np.float64)
        if bg.shape != (3,) or np.any(bg < 0) or np.any(bg > 1):
            raise ValueError("background_color must be an RGB triple in [0, 1]")
        object.__setattr__(self, "gaussians", gs)
        object.__setattr__(self, "background_color", _frozen(bg))

    def __len__(self):
        return len(self.gaussians)

    def arrays(self) -> dict:
        """Stacked parameter arrays, cached on first use."""
        cached = self.__dict__.get("_arrays")
        if cached is None:
            n = len(self.gaussians)
            cached = {
                "means": np.array([g.mean for g in self.gaussians]).reshape(n, 3),
                "scales": np.array([g.scale for g in self.gaussians]).reshape(n, 3),
                "rotations": np.array([g.rotation for g in self.gaussians]).reshape(n, 4),
                "opacities": np.array([g.opacity for g in self.gaussians]).reshape(n),
                "colors": np.array([g.color for g in self.gaussians]).reshape(n, 3),
            }
            for a in cached.values():
                a.setflags(write=False)
            object.__setattr__(self, "_arrays", cached)
        return cached

    def covariances(self) -> np.ndarray:
        a = self.arrays()
        if len(self) == 0:
            return np.zeros((0, 3, 3))
        R = quats_to_rotmats(a["rotations"])
        cov = np.einsum("nij,nj,nkj->nik", R, a["scales"] ** 2, R)
        return 0.5 * (cov + np.swapaxes(cov, 1, 2))

    def __eq__(self, other):
        if not isinstance(other, Scene):
            return NotImplemented
        return self.gaussians == other.gaussians and np.array_equal(
            self.background_color, other.background_color
        )

    __hash__ = None
