"""Greedy next-best-view loop driven by the frequency score.

Each step registers the dataset frame to the reconstruction frame from the
visited camera positions, rebuilds the reconstruction proxy, renders every
unvisited view within the search radius of the current camera and moves to
the one whose render has the lowest median frequency.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .dataset import Dataset
from .exceptions import DegenerateInput, Exhausted
from .frequency import SCORE_MODES, WINDOWS, rank_candidates, safe_score
from .metrics import CandidateScore, RunReport, StepReport, evaluate, trajectory_length
from .proxy import ProxyConfig, build_model, equivalent_iterations
from .registration import (
    orientation_residual_deg,
    rmsd,
    transform_scene,
    transform_view,
    umeyama,
)
from .render import render_grayscale
from .types import CameraView, Scene, SimilarityTransform, camera_center, quat_to_rotmat

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PlannerConfig:
    """Planner settings.

    ``radius=None`` resolves to 1.5x the median nearest-neighbour spacing of
    the dataset cameras. ``frame`` is the similarity taking dataset coordinates to
    the (simulated) reconstruction frame; ``rotation_noise`` (radians) and
    ``translation_noise`` jitter the reconstruction-frame poses each step.
    ``test_every=k`` holds out every k-th view (ids 0, k, 2k, ...); 0 keeps all.
    """

    init_count: int = 10
    budget: int = 100
    radius: Optional[float] = None
    widen_factor: float = 1.5
    proxy: ProxyConfig = field(default_factory=ProxyConfig)
    test_every: int = 8
    score_mode: str = "weighted-radial-median"
    window: str = "none"
    n_bins: int = 64
    frame: SimilarityTransform = field(default_factory=SimilarityTransform)
    rotation_noise: float = 0.0
    translation_noise: float = 0.0
    noise_seed: int = 0
    skip_registration: bool = False

    def __post_init__(self):
        if self.init_count < 1:
            raise ValueError("init_count must be positive")
        if self.budget < self.init_count:
            raise ValueError("budget must be at least init_count")
        if self.radius is not None and not self.radius > 0:
            raise ValueError("radius must be positive")
        if not self.widen_factor > 1:
            raise ValueError("widen_factor must be > 1")
        if self.test_every < 0 or self.test_every == 1:
            raise ValueError("test_every must be 0 or >= 2")
        if self.score_mode not in SCORE_MODES:
            raise ValueError(f"score_mode must be one of {SCORE_MODES}")
        if self.window not in WINDOWS:
            raise ValueError(f"window must be one of {WINDOWS}")

    def to_dict(self) -> dict:
        return {
            "init_count": self.init_count,
            "budget": self.budget,
            "radius": self.radius,
            "widen_factor": self.widen_factor,
            "proxy": self.proxy.to_dict(),
            "test_every": self.test_every,
            "score_mode": self.score_mode,
            "window": self.window,
            "n_bins": self.n_bins,
            "frame": {
                "rotation": self.frame.rotation.tolist(),
                "scale": self.frame.scale,
                "translation": self.frame.translation.tolist(),
            },
            "rotation_noise": self.rotation_noise,
            "translation_noise": self.translation_noise,
            "noise_seed": self.noise_seed,
            "skip_registration": self.skip_registration,
        }


@dataclass(frozen=True)
class PlannerState:
    visited: tuple
    selected: tuple = ()
    step: int = 0
    registration: Optional[SimilarityTransform] = None

    @property
    def current_pose_id(self) -> int:
        return self.visited[-1]


def test_ids(n_views: int, test_every: int) -> list[int]:
    if test_every <= 0:
        return []
    return list(range(0, n_views, test_every))


def usable_ids(n_views: int, test_every: int) -> list[int]:
    held = set(test_ids(n_views, test_every))
    return [i for i in range(n_views) if i not in held]


def default_radius(dataset: Dataset) -> float:
    """1.5x the median nearest-neighbour distance between dataset cameras.

    One step of this size reaches the adjacent capture positions, whichever
    ring they sit on.
    """
    c = dataset.centers()
    if len(c) < 2:
        return 1.0
    d = np.linalg.norm(c[:, None, :] - c[None, :, :], axis=2)
    np.fill_diagonal(d, np.inf)
    return 1.5 * float(np.median(d.min(axis=1)))


def resolve_radius(dataset: Dataset, cfg: PlannerConfig) -> float:
    return default_radius(dataset) if cfg.radius is None else float(cfg.radius)


def initial_state(dataset: Dataset, cfg: PlannerConfig) -> PlannerState:
    usable = usable_ids(len(dataset), cfg.test_every)
    if len(usable) < cfg.init_count:
        raise ValueError(
            f"dataset has {len(usable)} usable views, fewer than init_count={cfg.init_count}"
        )
    return PlannerState(tuple(usable[: cfg.init_count]))


def sample_candidates(state: PlannerState, all_views, r: float, excluded=()) -> list[int]:
    """Unvisited view ids within ``r`` of the current camera, ascending."""
    skip = set(state.visited) | set(excluded)
    here = camera_center(all_views[state.current_pose_id])
    return [
        v.id
        for v in sorted(all_views, key=lambda v: v.id)
        if v.id not in skip and np.linalg.norm(camera_center(v) - here) <= r
    ]


def _jitter(view: CameraView, cfg: PlannerConfig, step: int) -> CameraView:
    if cfg.rotation_noise == 0 and cfg.translation_noise == 0:
        return view
    rng = np.random.default_rng([cfg.noise_seed & 0xFFFFFFFF, step, view.id])
    axis_angle = rng.normal(scale=cfg.rotation_noise, size=3)
    angle = np.linalg.norm(axis_angle)
    if angle > 0:
        q = np.concatenate([[np.cos(angle / 2)], np.sin(angle / 2) * axis_angle / angle])
        dR = quat_to_rotmat(q)
    else:
        dR = np.eye(3)
    center = camera_center(view) + rng.normal(scale=cfg.translation_noise, size=3)
    R = dR @ view.rotation_wc
    return CameraView(view.id, R, -R @ center, view.fx, view.fy, view.cx, view.cy,
                      view.width, view.height)


def reconstruction_poses(dataset: Dataset, ids, cfg: PlannerConfig, step: int) -> list[CameraView]:
    """Poses of ``ids`` as the reconstruction pipeline would report them."""
    return [_jitter(transform_view(cfg.frame, dataset[i]), cfg, step) for i in ids]


def _is_identity(t: SimilarityTransform) -> bool:
    return t == SimilarityTransform.identity()


def _nearest(dataset: Dataset, state: PlannerState, excluded) -> int:
    here = camera_center(dataset[state.current_pose_id])
    skip = set(state.visited) | set(excluded)
    options = [v for v in dataset.views if v.id not in skip]
    if not options:
        raise Exhausted("no unvisited views remain")
    return min(options, key=lambda v: (float(np.linalg.norm(camera_center(v) - here)), v.id)).id


def plan_step(state: PlannerState, dataset: Dataset, truth: Scene,
              cfg: PlannerConfig) -> tuple[PlannerState, StepReport]:
    """Advance the planner by one view.

    Raises :class:`~freqnbv.exceptions.Exhausted` when every usable view has
    been visited. A degenerate registration (too few or collinear visited
    cameras) falls back to the nearest unvisited view, flagged in the report.
    """
    held = test_ids(len(dataset), cfg.test_every)
    skip = set(state.visited) | set(held)
    if all(v.id in skip for v in dataset.views):
        raise Exhausted("no unvisited views remain")

    iters = equivalent_iterations(len(state.selected))
    recon_visited = reconstruction_poses(dataset, state.visited, cfg, state.step)
    src = np.array([camera_center(dataset[i]) for i in state.visited])
    dst = np.array([camera_center(v) for v in recon_visited])
    try:
        reg = umeyama(src, dst)
    except DegenerateInput as exc:
        log.info("step %d: registration degenerate (%s); nearest-view fallback", state.step, exc)
        chosen = _nearest(dataset, state, held)
        report = StepReport(state.step, state.current_pose_id, chosen, None,
                            fallback=True, equivalent_iterations=iters)
        return _advance(state, chosen, None), report

    residual = rmsd(reg, src, dst)
    orient = orientation_residual_deg(reg, [dataset[i] for i in state.visited], recon_visited)
    log.debug("step %d: registration rmsd %.3g, orientation residual %.3g deg",
              state.step, residual, orient)

    truth_recon = truth if _is_identity(cfg.frame) else transform_scene(cfg.frame, truth)
    model = build_model(truth_recon, recon_visited, cfg.proxy)

    r = resolve_radius(dataset, cfg)
    candidates = sample_candidates(state, dataset.views, r, held)
    while not candidates:
        r *= cfg.widen_factor
        candidates = sample_candidates(state, dataset.views, r, held)

    to_recon = cfg.frame if cfg.skip_registration else reg
    summaries = []
    for j in candidates:
        view = transform_view(to_recon, dataset[j])
        summary = safe_score(render_grayscale(model, view), n_bins=cfg.n_bins,
                             mode=cfg.score_mode, window=cfg.window)
        summaries.append((j, summary))
    chosen = rank_candidates(summaries)
    log.info("step %d: %d candidates within r=%.3g, chose view %d",
             state.step, len(candidates), r, chosen)

    report = StepReport(
        state.step,
        state.current_pose_id,
        chosen,
        r,
        [CandidateScore(j, s.median_frequency, s.score) for j, s in summaries],
        False,
        residual,
        orient,
        iters,
    )
    return _advance(state, chosen, reg), report


def _advance(state: PlannerState, chosen: int, reg) -> PlannerState:
    return PlannerState(
        state.visited + (chosen,), state.selected + (chosen,), state.step + 1, reg
    )


def run(dataset: Dataset, truth: Scene, cfg: PlannerConfig, evaluate_model: bool = True) -> RunReport:
    """Plan until ``budget`` views are visited or the dataset runs out.

    The first ``init_count`` usable views (dataset order) seed the visited set;
    held-out test views never become candidates and are used for PSNR/SSIM.
    """
    usable = usable_ids(len(dataset), cfg.test_every)
    if cfg.budget > len(usable):
        raise ValueError(f"budget {cfg.budget} exceeds the {len(usable)} usable views")
    state = initial_state(dataset, cfg)
    steps, status = [], "complete"
    while len(state.visited) < cfg.budget:
        try:
            state, report = plan_step(state, dataset, truth, cfg)
        except Exhausted:
            status = "exhausted"
            break
        steps.append(report)

    held = test_ids(len(dataset), cfg.test_every)
    centers = dataset.centers()
    report = RunReport(
        dataset=dataset.name,
        status=status,
        initial_ids=list(state.visited[: cfg.init_count]),
        selected_ids=list(state.selected),
        test_ids=held,
        per_step=steps,
        trajectory_length_selected=trajectory_length(centers[list(state.visited)]),
        trajectory_length_full=trajectory_length(centers),
        equivalent_iterations=equivalent_iterations(len(state.selected)),
        config=cfg.to_dict(),
    )
    full = report.trajectory_length_full
    report.trajectory_ratio = report.trajectory_length_selected / full if full > 0 else 0.0
    if evaluate_model and held:
        model = final_model(dataset, truth, state.visited, cfg)
        report = evaluate(report, truth, model, [dataset[i] for i in held])
    return report


def final_model(dataset: Dataset, truth: Scene, visited, cfg: PlannerConfig) -> Scene:
    """Proxy reconstruction from ``visited``, expressed in the dataset frame."""
    return build_model(truth, [dataset[i] for i in visited], cfg.proxy)


class NextBestViewPlanner(BaseEstimator):
    """Estimator front end to :func:`run`.

    ``fit(dataset, truth)`` runs the planner; the visit order ends up in
    ``selected_ids_`` and the full report in ``report_``.

    Parameters mirror :class:`PlannerConfig` and :class:`ProxyConfig`.
    """

    def __init__(self, init_count=10, budget=100, radius=None, widen_factor=1.5,
                 blur_scale_base=4.0, maturity_count=3, opacity_floor=0.3, noise_seed=0,
                 test_every=8, score_mode="weighted-radial-median", window="none",
                 n_bins=64, evaluate=True):
        self.init_count = init_count
        self.budget = budget
        self.radius = radius
        self.widen_factor = widen_factor
        self.blur_scale_base = blur_scale_base
        self.maturity_count = maturity_count
        self.opacity_floor = opacity_floor
        self.noise_seed = noise_seed
        self.test_every = test_every
        self.score_mode = score_mode
        self.window = window
        self.n_bins = n_bins
        self.evaluate = evaluate

    def config(self, **overrides) -> PlannerConfig:
        proxy = ProxyConfig(self.blur_scale_base, self.maturity_count, self.opacity_floor,
                            self.noise_seed)
        cfg = PlannerConfig(
            init_count=self.init_count, budget=self.budget, radius=self.radius,
            widen_factor=self.widen_factor, proxy=proxy, test_every=self.test_every,
            score_mode=self.score_mode, window=self.window, n_bins=self.n_bins,
            noise_seed=self.noise_seed,
        )
        return replace(cfg, **overrides) if overrides else cfg

    def fit(self, X: Dataset, y: Scene, **config_overrides):
        cfg = self.config(**config_overrides)
        self.report_ = run(X, y, cfg, evaluate_model=self.evaluate)
        self.selected_ids_ = list(self.report_.selected_ids)
        self.visited_ids_ = self.report_.visited_ids
        return self

    def predict(self, X: Dataset) -> list[CameraView]:
        """Selected views of ``X`` in visit order."""
        check_is_fitted(self, "selected_ids_")
        return [X[i] for i in self.selected_ids_]
