"""Similarity registration of matched 3D point sets (Kabsch-Umeyama)."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_matched_points, check_points
from .exceptions import DegenerateInput
from .types import (
    CameraView,
    Gaussian3D,
    Scene,
    SimilarityTransform,
    camera_center,
    quat_multiply,
    rotmat_to_quat,
)

# relative threshold on the second singular value of the centred source
_RANK_TOL = 1e-9


def umeyama(source, target) -> SimilarityTransform:
    """Least-squares similarity mapping ``source`` onto ``target``.

    Minimises ``sum ||s R x_i + t - y_i||^2`` over rotations ``R`` (det +1),
    scales ``s > 0`` and translations ``t``.

    Raises
    ------
    DegenerateInput
        Fewer than three pairs, or source points (nearly) collinear.
    """
    X, Y = check_matched_points(source, target, min_points=3)
    n = len(X)
    mu_x, mu_y = X.mean(axis=0), Y.mean(axis=0)
    Xc, Yc = X - mu_x, Y - mu_y

    sv_src = np.linalg.svd(Xc, compute_uv=False)
    if sv_src[0] == 0 or sv_src[1] <= _RANK_TOL * sv_src[0]:
        raise DegenerateInput("source points are collinear; covariance rank < 2")

    cov = Yc.T @ Xc / n
    U, D, Vt = np.linalg.svd(cov)
    S = np.ones(3)
    if np.linalg.det(U) * np.linalg.det(Vt) < 0:
        S[2] = -1.0
    R = (U * S) @ Vt
    var_x = np.sum(Xc**2) / n
    s = float(np.dot(D, S) / var_x)
    if not s > 0:
        raise DegenerateInput("registration produced a non-positive scale")
    t = mu_y - s * R @ mu_x
    # re-orthonormalise so the det/orthogonality checks hold to machine precision
    u, _, vt = np.linalg.svd(R)
    R = u @ vt
    return SimilarityTransform(R, s, t)


def apply(transform: SimilarityTransform, p) -> np.ndarray:
    """``s R p + t`` for a single point or an ``(n, 3)`` array."""
    p = np.asarray(p, dtype=np.float64)
    return transform.scale * p @ transform.rotation.T + transform.translation


def rmsd(transform: SimilarityTransform, source, target) -> float:
    X, Y = check_matched_points(source, target, min_points=1)
    return float(np.sqrt(np.mean(np.sum((apply(transform, X) - Y) ** 2, axis=1))))


def compose(outer: SimilarityTransform, inner: SimilarityTransform) -> SimilarityTransform:
    """Transform equivalent to applying ``inner`` then ``outer``."""
    return SimilarityTransform(
        outer.rotation @ inner.rotation,
        outer.scale * inner.scale,
        outer.scale * outer.rotation @ inner.translation + outer.translation,
    )


def inverse(transform: SimilarityTransform) -> SimilarityTransform:
    Rt = transform.rotation.T
    return SimilarityTransform(Rt, 1.0 / transform.scale, -Rt @ transform.translation / transform.scale)


def transform_view(transform: SimilarityTransform, view: CameraView) -> CameraView:
    """Re-express a camera in the frame reached through ``transform``.

    The centre moves with the similarity, the orientation is rotated by it and
    the intrinsics are untouched.
    """
    center = apply(transform, camera_center(view))
    R_wc = view.rotation_wc @ transform.rotation.T
    return CameraView(
        view.id, R_wc, -R_wc @ center, view.fx, view.fy, view.cx, view.cy, view.width, view.height
    )


def transform_scene(transform: SimilarityTransform, scene: Scene) -> Scene:
    """Move every Gaussian through ``transform``; extents scale with it."""
    q_R = rotmat_to_quat(transform.rotation)
    moved = [
        Gaussian3D(
            apply(transform, g.mean),
            g.scale * transform.scale,
            quat_multiply(q_R, g.rotation),
            g.opacity,
            g.color,
        )
        for g in scene.gaussians
    ]
    return Scene(moved, scene.background_color)


def orientation_residual_deg(transform: SimilarityTransform, source_views, target_views) -> float:
    """Largest rotation angle between registered and observed camera orientations.

    Only reported; registration itself uses positions alone.
    """
    worst = 0.0
    for a, b in zip(source_views, target_views):
        predicted = a.rotation_wc @ transform.rotation.T
        delta = predicted @ b.rotation_wc.T
        cos = np.clip((np.trace(delta) - 1.0) / 2.0, -1.0, 1.0)
        worst = max(worst, float(np.degrees(np.arccos(cos))))
    return worst


class UmeyamaRegistration(TransformerMixin, BaseEstimator):
    """Estimator wrapper around :func:`umeyama`.

    ``fit(X, y)`` learns the similarity taking rows of ``X`` onto rows of ``y``;
    ``transform`` then maps new points through it.

    Attributes
    ----------
    transform_ : SimilarityTransform
    rotation_, scale_, translation_ : fitted components
    rmsd_ : float
        Root mean squared residual on the training pairs.
    """

    def fit(self, X, y):
        self.transform_ = umeyama(X, y)
        self.rotation_ = self.transform_.rotation
        self.scale_ = self.transform_.scale
        self.translation_ = self.transform_.translation
        self.rmsd_ = rmsd(self.transform_, X, y)
        self.n_features_in_ = 3
        return self

    def transform(self, X):
        check_is_fitted(self, "transform_")
        return apply(self.transform_, check_points(X))

    def inverse_transform(self, X):
        check_is_fitted(self, "transform_")
        return apply(inverse(self.transform_), check_points(X))
