import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from freqnbv.types import (
    CameraView,
    Gaussian3D,
    ImageBuffer,
    Scene,
    SimilarityTransform,
    camera_center,
    covariance_of,
    look_at,
    quat_multiply,
    quat_to_rotmat,
    rotmat_to_quat,
)

from oracles import cov3d, random_rotation, rot_from_wxyz

SQ = np.sqrt(0.5)
finite = st.floats(-1.0, 1.0, allow_nan=False)
quats = arrays(np.float64, 4, elements=finite).filter(lambda q: np.linalg.norm(q) > 0.1)
scales = arrays(np.float64, 3, elements=st.floats(0.01, 5.0))


class TestQuaternion:
    @given(quats)
    def test_matches_scipy(self, q):
        np.testing.assert_allclose(quat_to_rotmat(q), rot_from_wxyz(q / np.linalg.norm(q)), atol=1e-12)

    @given(quats)
    def test_round_trip_up_to_sign(self, q):
        q = q / np.linalg.norm(q)
        back = rotmat_to_quat(quat_to_rotmat(q))
        assert back[0] >= 0
        assert min(np.abs(back - q).max(), np.abs(back + q).max()) < 1e-9

    def test_multiply_composes_rotations(self, rng):
        a, b = rng.normal(size=4), rng.normal(size=4)
        np.testing.assert_allclose(quat_to_rotmat(quat_multiply(a / np.linalg.norm(a), b / np.linalg.norm(b))),
                                   quat_to_rotmat(a) @ quat_to_rotmat(b), atol=1e-12)


class TestCameraCenter:
    def test_identity(self):
        v = CameraView(0, np.eye(3), np.zeros(3), 1, 1, 0, 0, 8, 8)
        np.testing.assert_array_equal(camera_center(v), np.zeros(3))

    def test_pure_translation(self):
        v = CameraView(0, np.eye(3), [0, 0, -5], 1, 1, 0, 0, 8, 8)
        np.testing.assert_allclose(camera_center(v), [0, 0, 5])

    def test_rotated(self):
        # 90 deg about z: R = [[0,-1,0],[1,0,0],[0,0,1]]; -R^T (1,0,0) = (0,1,0)
        Rz = np.array([[0.0, -1, 0], [1, 0, 0], [0, 0, 1]])
        v = CameraView(0, Rz, [1, 0, 0], 1, 1, 0, 0, 8, 8)
        np.testing.assert_allclose(camera_center(v), [0, 1, 0], atol=1e-15)

    def test_left_inverse(self, rng):
        for _ in range(20):
            R = random_rotation(rng)
            v = CameraView(0, R, rng.normal(size=3), 1, 1, 0, 0, 8, 8)
            assert np.abs(R @ camera_center(v) + v.translation_wc).max() < 1e-12

    def test_rejects_reflection(self):
        with pytest.raises(ValueError):
            CameraView(0, np.diag([1.0, 1, -1]), np.zeros(3), 1, 1, 0, 0, 8, 8)

    def test_look_at_axis(self, rng):
        eye, target = rng.normal(size=3) * 3, rng.normal(size=3)
        R, t = look_at(eye, target)
        p = R @ target + t
        assert p[2] > 0
        np.testing.assert_allclose(p[:2], 0, atol=1e-12)


class TestCovariance:
    def test_identity(self):
        np.testing.assert_allclose(covariance_of(Gaussian3D(np.zeros(3), np.ones(3))), np.eye(3))

    def test_axis_aligned(self):
        np.testing.assert_allclose(covariance_of(Gaussian3D(np.zeros(3), [2, 1, 1])), np.diag([4.0, 1, 1]))

    def test_rotated_45_about_z(self):
        q = [np.cos(np.pi / 8), 0, 0, np.sin(np.pi / 8)]
        cov = covariance_of(Gaussian3D(np.zeros(3), [2, 1, 1], q))
        # R diag(4,1,1) R^T with c = s = 1/sqrt(2)
        expected = np.array([[2.5, 1.5, 0], [1.5, 2.5, 0], [0, 0, 1]])
        np.testing.assert_allclose(cov, expected, atol=1e-12)
        np.testing.assert_allclose(np.linalg.eigvalsh(cov), [1, 1, 4], atol=1e-12)

    @given(scales, quats)
    @settings(max_examples=100)
    def test_eigenvalues_are_squared_scales(self, s, q):
        g = Gaussian3D(np.zeros(3), s, q)
        cov = covariance_of(g)
        np.testing.assert_allclose(cov, cov.T, atol=0)
        np.testing.assert_allclose(np.linalg.eigvalsh(cov), np.sort(s**2), atol=1e-9 * max(1, s.max() ** 2))
        np.testing.assert_allclose(cov, cov3d(g), atol=1e-12 * s.max() ** 2)


class TestValueTypes:
    def test_gaussian_validation(self):
        with pytest.raises(ValueError):
            Gaussian3D(np.zeros(3), [1, 0, 1])
        with pytest.raises(ValueError):
            Gaussian3D(np.zeros(3), np.ones(3), opacity=1.5)
        with pytest.raises(ValueError):
            Gaussian3D(np.zeros(3), np.ones(3), color=[1.2, 0, 0])
        with pytest.raises(ValueError):
            Gaussian3D(np.zeros(3), np.ones(3), rotation=np.zeros(4))

    def test_gaussian_is_immutable(self):
        g = Gaussian3D(np.zeros(3), np.ones(3))
        with pytest.raises(ValueError):
            g.mean[0] = 1.0
        with pytest.raises(AttributeError):
            g.opacity = 0.5

    def test_gaussian_equality(self):
        a = Gaussian3D([1, 2, 3], np.ones(3), [2, 0, 0, 0])
        assert a == Gaussian3D([1, 2, 3], np.ones(3))
        assert a != Gaussian3D([1, 2, 4], np.ones(3))

    def test_view_validation(self):
        with pytest.raises(ValueError):
            CameraView(0, np.eye(3), np.zeros(3), -1, 1, 0, 0, 8, 8)
        with pytest.raises(ValueError):
            CameraView(0, np.eye(3), np.zeros(3), 1, 1, 0, 0, 0, 8)

    def test_image_layout(self):
        img = ImageBuffer.from_flat(np.arange(6) / 6, width=3, height=2)
        assert (img.width, img.height, img.channels) == (3, 2, 1)
        assert img.pixels[1, 0, 0] == 3 / 6
        np.testing.assert_array_equal(img.flat, np.arange(6) / 6)

    def test_image_range(self):
        with pytest.raises(ValueError):
            ImageBuffer(np.full((4, 4), 1.5))
        with pytest.raises(ValueError):
            ImageBuffer.from_flat([0.1] * 5, 2, 2)

    def test_similarity_validation(self):
        with pytest.raises(ValueError):
            SimilarityTransform(np.eye(3), 0.0, np.zeros(3))
        T = SimilarityTransform(np.eye(3), 2.0, [1, 2, 3])
        np.testing.assert_allclose(T.as_matrix() @ [1, 1, 1, 1], [3, 4, 5, 1])
        assert SimilarityTransform.identity() == SimilarityTransform()

    def test_scene_arrays(self, rng):
        from conftest import random_scene
        s = random_scene(rng, n=5)
        a = s.arrays()
        assert a["means"].shape == (5, 3)
        np.testing.assert_allclose(s.covariances()[2], covariance_of(s.gaussians[2]))
        assert len(Scene()) == 0
