import sys

import numpy as np
import pytest

from freqnbv.types import CameraView, Gaussian3D, Scene, look_at


def random_scene(rng, n=None, spread=1.0, background=None):
    n = int(rng.integers(1, 33)) if n is None else n
    gs = [
        Gaussian3D(
            rng.uniform(-spread, spread, 3),
            np.exp(rng.uniform(np.log(0.05), np.log(0.4), 3)),
            rng.normal(size=4),
            rng.uniform(0.2, 1.0),
            rng.uniform(0, 1, 3),
        )
        for _ in range(n)
    ]
    bg = rng.uniform(0, 1, 3) if background is None else background
    return Scene(gs, bg)


def random_view(rng, size=64, dist=(3.0, 5.0), vid=0):
    d = rng.normal(size=3)
    eye = d / np.linalg.norm(d) * rng.uniform(*dist)
    R, t = look_at(eye, rng.normal(scale=0.2, size=3))
    f = rng.uniform(40, 90)
    return CameraView(vid, R, t, f, f * rng.uniform(0.9, 1.1), (size - 1) / 2 + rng.normal(),
                      (size - 1) / 2 + rng.normal(), size, size)


def identity_view(f=100.0, c=50.0, size=100, vid=0):
    return CameraView(vid, np.eye(3), np.zeros(3), f, f, c, c, size, size)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
