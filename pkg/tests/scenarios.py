"""Staged scenes where the right next view is known by construction.

Two Gaussian clusters sit far apart. The initial cameras all look at cluster
A; every candidate also looks at A except one, which looks at the
never-observed cluster B.
"""
import numpy as np

from freqnbv.dataset import Dataset
from freqnbv.planner import PlannerConfig, PlannerState
from freqnbv.proxy import visibility_mask
from freqnbv.types import CameraView, Gaussian3D, Scene, camera_center, look_at

W = H = 64
F = 64.0


def cluster(center, n, rng, spread=0.5):
    out = []
    for _ in range(n):
        mean = center + rng.uniform(-spread, spread, 3)
        scale = np.exp(rng.uniform(np.log(0.03), np.log(0.1), 3))
        out.append(Gaussian3D(mean, scale, rng.normal(size=4), rng.uniform(0.7, 1.0),
                              rng.uniform(0.2, 1.0, 3)))
    return out


def _view(i, eye, target):
    R, t = look_at(eye, target)
    return CameraView(i, R, t, F, F, (W - 1) / 2, (H - 1) / 2, W, H)


def _ring_eye(center, angle, dist, z):
    return center + np.array([dist * np.cos(angle), dist * np.sin(angle), z])


def staged_scenario(seed, n_init=4, n_distractors=4):
    """Return ``(dataset, truth, cfg, state, expected_id)``."""
    rng = np.random.default_rng(seed)
    psi = rng.uniform(0, 2 * np.pi)
    a = np.zeros(3)
    b = 7.0 * np.array([np.cos(psi), np.sin(psi), 0.0])
    ga, gb = cluster(a, 20, rng), cluster(b, 20, rng)
    truth = Scene(ga + gb)
    scene_a, scene_b = Scene(ga), Scene(gb)

    # every camera sits between the clusters facing away from the other one,
    # so the unobserved cluster is always behind it
    away = psi
    init_eyes = [
        _ring_eye(a, away + off, 3.0, z)
        for off, z in zip(np.linspace(-0.4, 0.4, n_init), rng.uniform(-0.5, 0.5, n_init))
    ]
    offsets = rng.uniform(0.5, 1.0, n_distractors) * rng.choice([-1, 1], n_distractors)
    cand = [("a", _ring_eye(a, away + off, 3.0, rng.uniform(-0.5, 0.5))) for off in offsets]
    slot = int(rng.integers(0, len(cand) + 1))
    cand.insert(slot, ("b", _ring_eye(b, psi + np.pi + rng.uniform(-0.5, 0.5), 3.0, rng.uniform(-0.5, 0.5))))

    views = [_view(i, e, a) for i, e in enumerate(init_eyes)]
    expected = None
    for kind, eye in cand:
        vid = len(views)
        views.append(_view(vid, eye, a if kind == "a" else b))
        if kind == "b":
            expected = vid
    dataset = Dataset(views, f"staged-{seed}")

    # the staging only holds if the clusters never share a frame
    for v in views:
        sees_a = visibility_mask(scene_a, v).any()
        sees_b = visibility_mask(scene_b, v).any()
        assert sees_a != sees_b, f"view {v.id} of seed {seed} sees both or neither cluster"

    cfg = PlannerConfig(init_count=n_init, budget=n_init + 1, radius=float("inf"), test_every=0)
    state = PlannerState(tuple(range(n_init)))
    return dataset, truth, cfg, state, expected


def views_near(view, n, rng, jitter=0.2, first_id=100):
    """``n`` extra cameras around ``view``, all aimed at the point it looks at."""
    eye = camera_center(view)
    target = eye + 3.0 * view.rotation_wc[2]
    return [_view(first_id + k, eye + rng.normal(scale=jitter, size=3), target) for k in range(n)]
