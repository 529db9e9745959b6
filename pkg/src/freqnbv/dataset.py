"""Camera datasets: COLMAP text I/O, synthetic orbits and synthetic scenes."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ParseError, UnsupportedCameraModel
from .types import (
    CameraView,
    Gaussian3D,
    Scene,
    camera_center,
    look_at,
    quat_to_rotmat,
    rotmat_to_quat,
)


@dataclass(frozen=True)
class Dataset:
    views: tuple
    name: str = "dataset"

    def __post_init__(self):
        views = tuple(self.views)
        for i, v in enumerate(views):
            if v.id != i:
                raise ValueError(f"view at position {i} has id {v.id}; ids must equal positions")
        object.__setattr__(self, "views", views)

    def __len__(self):
        return len(self.views)

    def __getitem__(self, i) -> CameraView:
        return self.views[i]

    def centers(self) -> np.ndarray:
        return np.array([camera_center(v) for v in self.views]).reshape(-1, 3)


@dataclass(frozen=True)
class Intrinsics:
    width: int = 64
    height: int = 64
    fx: float = 64.0
    fy: float = 64.0
    cx: float | None = None
    cy: float | None = None

    def resolved(self):
        cx = (self.width - 1) / 2.0 if self.cx is None else self.cx
        cy = (self.height - 1) / 2.0 if self.cy is None else self.cy
        return self.fx, self.fy, cx, cy


# ---------------------------------------------------------------- COLMAP text

def _fields(line: str, n_min: int, lineno: int, path) -> list[str]:
    parts = line.split()
    if len(parts) < n_min:
        raise ParseError(f"expected at least {n_min} fields, got {len(parts)}", lineno, path)
    return parts


def _num(token: str, cast, lineno: int, path, what: str):
    try:
        value = cast(token)
    except ValueError:
        raise ParseError(f"malformed {what}: {token!r}", lineno, path) from None
    if cast is float and not math.isfinite(value):
        raise ParseError(f"non-finite {what}: {token!r}", lineno, path)
    return value


def _data_lines(path):
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            yield lineno, raw.rstrip("\n")


def read_cameras_text(path) -> dict:
    """``camera_id -> (width, height, fx, fy, cx, cy)``."""
    cameras = {}
    for lineno, line in _data_lines(path):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = _fields(line, 4, lineno, path)
        cam_id = _num(parts[0], int, lineno, path, "CAMERA_ID")
        model = parts[1]
        width = _num(parts[2], int, lineno, path, "WIDTH")
        height = _num(parts[3], int, lineno, path, "HEIGHT")
        params = [_num(p, float, lineno, path, "camera parameter") for p in parts[4:]]
        if model == "SIMPLE_PINHOLE":
            if len(params) != 3:
                raise ParseError("SIMPLE_PINHOLE takes 3 parameters (f, cx, cy)", lineno, path)
            f, cx, cy = params
            cameras[cam_id] = (width, height, f, f, cx, cy)
        elif model == "PINHOLE":
            if len(params) != 4:
                raise ParseError("PINHOLE takes 4 parameters (fx, fy, cx, cy)", lineno, path)
            cameras[cam_id] = (width, height, *params)
        else:
            raise UnsupportedCameraModel(model)
    return cameras


def read_colmap_text(cameras_path, images_path, name: str | None = None) -> Dataset:
    """Load poses from ``cameras.txt`` / ``images.txt``.

    The 2D-point line following each image line is skipped. Views are ordered
    by image name, which stands in for acquisition order, and renumbered
    ``0..n-1`` in that order.
    """
    cameras = read_cameras_text(cameras_path)
    entries = []
    expect_points = False
    for lineno, line in _data_lines(images_path):
        if line.lstrip().startswith("#"):
            continue
        if expect_points:
            expect_points = False
            continue
        if not line.strip():
            continue
        parts = _fields(line, 10, lineno, images_path)
        _num(parts[0], int, lineno, images_path, "IMAGE_ID")
        q = [_num(p, float, lineno, images_path, "quaternion component") for p in parts[1:5]]
        t = [_num(p, float, lineno, images_path, "translation component") for p in parts[5:8]]
        cam_id = _num(parts[8], int, lineno, images_path, "CAMERA_ID")
        image_name = " ".join(parts[9:])
        if cam_id not in cameras:
            raise ParseError(f"unknown CAMERA_ID {cam_id}", lineno, images_path)
        if np.linalg.norm(q) == 0:
            raise ParseError("zero quaternion", lineno, images_path)
        entries.append((image_name, q, t, cameras[cam_id]))
        expect_points = True
    entries.sort(key=lambda e: e[0])
    views = []
    for i, (_, q, t, (w, h, fx, fy, cx, cy)) in enumerate(entries):
        views.append(CameraView(i, quat_to_rotmat(q), t, fx, fy, cx, cy, w, h))
    return Dataset(views, name or Path(images_path).parent.name or "colmap")


def write_colmap_text(dataset: Dataset, directory) -> tuple[Path, Path]:
    """Write ``cameras.txt``, ``images.txt`` and an empty ``points3D.txt``.

    One PINHOLE camera per distinct intrinsics, numbered in first-use order.
    Image names are zero-padded ids so name order equals dataset order.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    cam_ids: dict = {}
    for v in dataset.views:
        key = (v.width, v.height, v.fx, v.fy, v.cx, v.cy)
        cam_ids.setdefault(key, len(cam_ids) + 1)
    cams = directory / "cameras.txt"
    with open(cams, "w") as fh:
        fh.write("# Camera list with one line of data per camera:\n")
        fh.write("#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n")
        fh.write(f"# Number of cameras: {len(cam_ids)}\n")
        for (w, h, fx, fy, cx, cy), cid in cam_ids.items():
            fh.write(f"{cid} PINHOLE {w} {h} {fx!r} {fy!r} {cx!r} {cy!r}\n")
    imgs = directory / "images.txt"
    with open(imgs, "w") as fh:
        fh.write("# Image list with two lines of data per image:\n")
        fh.write("#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n")
        fh.write("#   POINTS2D[] as (X, Y, POINT3D_ID)\n")
        fh.write(f"# Number of images: {len(dataset)}\n")
        width = max(5, len(str(len(dataset))))
        for v in dataset.views:
            q = rotmat_to_quat(v.rotation_wc)
            t = v.translation_wc
            cid = cam_ids[(v.width, v.height, v.fx, v.fy, v.cx, v.cy)]
            vals = " ".join(repr(float(x)) for x in (*q, *t))
            fh.write(f"{v.id + 1} {vals} {cid} {v.id:0{width}d}.png\n\n")
    (directory / "points3D.txt").write_text("# 3D point list (not used)\n")
    return cams, imgs


def read_dataset_dir(directory) -> Dataset:
    directory = Path(directory)
    return read_colmap_text(directory / "cameras.txt", directory / "images.txt", directory.name)


# --------------------------------------------------------------- synthetic

def ring_heights(n_orbits: int, height_step: float) -> np.ndarray:
    """Vertical offset of each ring, centred on the target height."""
    return height_step * (np.arange(n_orbits) - (n_orbits - 1) / 2.0)


def ring_sizes(n_views: int, n_orbits: int) -> list[int]:
    base, extra = divmod(n_views, n_orbits)
    return [base + (1 if k < extra else 0) for k in range(n_orbits)]


def generate_orbit_dataset(
    n_views: int = 60,
    n_orbits: int = 3,
    radius: float = 4.0,
    target=(0.0, 0.0, 0.0),
    intrinsics: Intrinsics = Intrinsics(),
    seed: int = 0,
    height_step: float | None = None,
    name: str = "orbit",
) -> Dataset:
    """Cameras on ``n_orbits`` stacked rings, all looking at ``target``.

    Views are laid out ring after ring in acquisition order, evenly spaced in
    angle, so visiting them in order makes ``n_orbits`` revolutions. The seed
    sets the common starting azimuth; successive rings are staggered by a
    fraction of the angular step.
    """
    if n_views < 8 or n_orbits < 1 or not radius > 0:
        raise ValueError("need n_views >= 8, n_orbits >= 1 and radius > 0")
    if height_step is None:
        height_step = 0.05 * radius
    target = np.asarray(target, dtype=np.float64)
    phase0 = np.random.default_rng(seed).uniform(0.0, 2.0 * np.pi)
    fx, fy, cx, cy = intrinsics.resolved()
    heights = ring_heights(n_orbits, height_step)
    views = []
    for k, count in enumerate(ring_sizes(n_views, n_orbits)):
        step = 2.0 * np.pi / count
        for j in range(count):
            theta = phase0 + j * step + k * step / n_orbits
            eye = target + np.array([radius * np.cos(theta), radius * np.sin(theta), heights[k]])
            R, t = look_at(eye, target)
            views.append(
                CameraView(len(views), R, t, fx, fy, cx, cy, intrinsics.width, intrinsics.height)
            )
    return Dataset(views, name)


def generate_cluster_scene(
    n_gaussians: int = 150,
    bounds=((-2.0, -2.0, -0.6), (2.0, 2.0, 0.6)),
    seed: int = 0,
    scale_range=(0.03, 0.12),
    background=(0.0, 0.0, 0.0),
) -> Scene:
    """Seeded random Gaussians with means drawn uniformly inside ``bounds``.

    Per-axis extents are log-uniform in ``scale_range`` (fractions of the
    smallest box side), orientations uniform, opacities in ``[0.6, 1]``.
    """
    if n_gaussians < 1:
        raise ValueError("n_gaussians must be >= 1")
    lo, hi = (np.asarray(b, dtype=np.float64) for b in bounds)
    if np.any(hi <= lo):
        raise ValueError("bounds must satisfy min < max on every axis")
    rng = np.random.default_rng(seed)
    side = float(np.min(hi - lo))
    means = rng.uniform(lo, hi, size=(n_gaussians, 3))
    log_lo, log_hi = np.log(scale_range[0] * side), np.log(scale_range[1] * side)
    scales = np.exp(rng.uniform(log_lo, log_hi, size=(n_gaussians, 3)))
    quats = rng.normal(size=(n_gaussians, 4))
    opac = rng.uniform(0.6, 1.0, size=n_gaussians)
    colors = rng.uniform(0.0, 1.0, size=(n_gaussians, 3))
    gs = [Gaussian3D(means[i], scales[i], quats[i], opac[i], colors[i]) for i in range(n_gaussians)]
    return Scene(gs, background)


# ---------------------------------------------------------- scene documents

def scene_to_dict(scene: Scene) -> dict:
    return {
        "background_color": scene.background_color.tolist(),
        "gaussians": [
            {
                "mean": g.mean.tolist(),
                "scale": g.scale.tolist(),
                "rotation": g.rotation.tolist(),
                "opacity": g.opacity,
                "color": g.color.tolist(),
            }
            for g in scene.gaussians
        ],
    }


def scene_from_dict(doc: dict) -> Scene:
    gs = [
        Gaussian3D(d["mean"], d["scale"], d["rotation"], d["opacity"], d["color"])
        for d in doc["gaussians"]
    ]
    return Scene(gs, doc.get("background_color", (0.0, 0.0, 0.0)))


def write_scene(scene: Scene, path):
    Path(path).write_text(json.dumps(scene_to_dict(scene), indent=1) + "\n")


def read_scene(path) -> Scene:
    try:
        doc = json.loads(Path(path).read_text())
        return scene_from_dict(doc)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(f"invalid scene document: {exc}", path=path) from exc


@dataclass
class SyntheticConfig:
    """Keys accepted in a synthetic scene/trajectory document."""

    n_views: int = 60
    n_orbits: int = 3
    radius: float = 4.0
    target: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    seed: int = 0
    n_gaussians: int = 150
    bounds: list = field(default_factory=lambda: [[-2.0, -2.0, -0.6], [2.0, 2.0, 0.6]])
    width: int = 64
    height: int = 64
    fx: float = 96.0
    fy: float = 96.0
    height_step: float | None = None

    @classmethod
    def from_dict(cls, doc: dict) -> "SyntheticConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ParseError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def read(cls, path) -> "SyntheticConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid config document: {exc.msg}", exc.lineno, path) from exc
        if not isinstance(doc, dict):
            raise ParseError("config document must be a key/value mapping", path=path)
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        return asdict(self)

    def intrinsics(self) -> Intrinsics:
        return Intrinsics(self.width, self.height, self.fx, self.fy)

    def build(self) -> tuple[Scene, Dataset]:
        scene = generate_cluster_scene(self.n_gaussians, self.bounds, self.seed)
        dataset = generate_orbit_dataset(
            self.n_views, self.n_orbits, self.radius, self.target, self.intrinsics(),
            self.seed, self.height_step, name=f"orbit-{self.seed}",
        )
        return scene, dataset

