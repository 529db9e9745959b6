"""Frequency-guided next-best-view selection for Gaussian-splat reconstruction."""
from .dataset import Dataset, generate_cluster_scene, generate_orbit_dataset, read_colmap_text
from .frequency import FrequencyScorer, SpectrumSummary, magnitude_spectrum, rank_candidates, score_view
from .metrics import RunReport, StepReport, psnr, ssim, trajectory_length
from .planner import NextBestViewPlanner, PlannerConfig, PlannerState, plan_step, run
from .proxy import ProxyConfig, build_model, visibility
from .registration import UmeyamaRegistration, apply, transform_view, umeyama
from .render import project_gaussian, render, render_grayscale
from .types import (
    CameraView,
    Gaussian3D,
    ImageBuffer,
    Scene,
    SimilarityTransform,
    camera_center,
    covariance_of,
)

__version__ = "0.1.0"

__all__ = [
    "CameraView", "Dataset", "FrequencyScorer", "Gaussian3D", "ImageBuffer",
    "NextBestViewPlanner", "PlannerConfig", "PlannerState", "ProxyConfig", "RunReport",
    "Scene", "SimilarityTransform", "SpectrumSummary", "StepReport", "UmeyamaRegistration",
    "apply", "build_model", "camera_center", "covariance_of", "generate_cluster_scene",
    "generate_orbit_dataset", "magnitude_spectrum", "plan_step", "project_gaussian", "psnr",
    "rank_candidates", "read_colmap_text", "render", "render_grayscale", "run", "score_view",
    "ssim", "trajectory_length", "transform_view", "umeyama", "visibility",
]
