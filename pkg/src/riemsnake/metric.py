"""Image-derived Riemannian metric and length evaluation.

Per pixel the metric is ``G = mu1 * n n^T + mu2 * t t^T`` with ``n`` the
contour normal and ``t = n`` rotated by 90 degrees. The eigenvalues grow with
contour strength and curvature, so that keeping snake edges at a fixed
Riemannian length makes them short (in Euclidean terms) exactly where the
image has strong, curved structure. Both eigenvalues are at least 1, hence
every Riemannian length bounds the Euclidean length from above; collision
tests exploit this.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .imageops import bilinear_sample
from .tensorfeat import ContourFeatures

__all__ = [
    "MetricParams",
    "MetricField",
    "build_metric",
    "identity_metric",
    "metric_at",
    "riemannian_edge_length",
    "riemannian_edge_lengths",
    "riemannian_vertex_distance",
]


@dataclass(frozen=True)
class MetricParams:
    """User scales of the metric.

    ``s_ref``: gradient strength over which a contour counts as reliable.
    ``l_min`` / ``l_max``: minimum/maximum edge length of the model (pixels).
    ``zeta``: band ratio (> 2 for resampling to converge); ``delta = l_max/zeta``.
    ``kappa_max``: by default the maximum curvature detected in the image over
    pixels with ``s >= kappa_mask_fraction * s_ref``; settable explicitly to pin
    the curvature scale across a sweep. ``kappa_ref = kappa_max * l_min / delta``.
    """

    s_ref: float
    l_min: float = 0.5
    l_max: float = 25.0
    zeta: float = 2.5
    kappa_max: float | None = None
    kappa_mask_fraction: float = 0.5

    def __post_init__(self):
        if self.s_ref <= 0:
            raise ValueError(f"s_ref must be positive, got {self.s_ref}")
        if not 0 < self.l_min < self.l_max:
            raise ValueError(f"need 0 < l_min < l_max, got {self.l_min}, {self.l_max}")
        if self.zeta <= 2:
            raise ValueError(f"zeta must be > 2, got {self.zeta}")

    @property
    def delta(self) -> float:
        return self.l_max / self.zeta

    def kappa_ref(self, kappa_max: float) -> float:
        return kappa_max * self.l_min / self.delta


@dataclass(frozen=True)
class MetricField:
    """Dense symmetric positive-definite 2x2 field with cached eigenstructure.

    Eigenpairs (mu1 >= mu2 >= 1) are cached from construction; continuous
    evaluation interpolates the matrix coefficients, not the eigenpairs.
    """

    gxx: np.ndarray
    gxy: np.ndarray
    gyy: np.ndarray
    mu1: np.ndarray
    mu2: np.ndarray
    v1x: np.ndarray
    v1y: np.ndarray
    kappa_max: float = 0.0
    kappa_ref_value: float = 0.0
    is_identity: bool = False

    @property
    def shape(self):
        return self.gxx.shape


def identity_metric(shape) -> MetricField:
    """Euclidean metric: G = I everywhere (the uniform-sampling control)."""
    one = np.ones(shape)
    zero = np.zeros(shape)
    return MetricField(one, zero, one.copy(), one.copy(), one.copy(),
                       one.copy(), zero.copy(), is_identity=True)


def build_metric(features: ContourFeatures, p: MetricParams) -> MetricField:
    """Assemble G from contour features.

    mu1 = clamp((s/s_ref)^2 * (kappa_max/kappa_ref)^2, 1, (kappa_max/kappa_ref)^2)
    mu2 = clamp((kappa/kappa_max)^2 * mu1,             1, mu1)
    """
    if p.kappa_max is not None:
        kappa_max = float(p.kappa_max)
    else:
        mask = features.s >= p.kappa_mask_fraction * p.s_ref
        kappa_max = float(features.kappa[mask].max(initial=0.0)) if mask.any() else 0.0
    if kappa_max <= 0:
        return identity_metric(features.shape)

    kappa_ref = p.kappa_ref(kappa_max)
    cap = (kappa_max / kappa_ref) ** 2  # == (delta / l_min)^2
    mu1 = np.clip((features.s / p.s_ref) ** 2 * cap, 1.0, cap)
    mu2 = np.clip((features.kappa / kappa_max) ** 2 * mu1, 1.0, mu1)

    nx, ny = features.nx, features.ny
    gxx = mu1 * nx * nx + mu2 * ny * ny
    gxy = (mu1 - mu2) * nx * ny
    gyy = mu1 * ny * ny + mu2 * nx * nx
    return MetricField(gxx, gxy, gyy, mu1, mu2, nx, ny,
                       kappa_max=kappa_max, kappa_ref_value=kappa_ref)


def _coeffs_at(field: MetricField, pts: np.ndarray):
    gxx = bilinear_sample(field.gxx, pts)
    gxy = bilinear_sample(field.gxy, pts)
    gyy = bilinear_sample(field.gyy, pts)
    return gxx, gxy, gyy


def metric_at(field: MetricField, pt) -> np.ndarray:
    """Bilinearly interpolated 2x2 metric matrix, eigenvalues clamped to >= 1."""
    gxx, gxy, gyy = (float(v) for v in _coeffs_at(field, np.asarray(pt, dtype=np.float64)))
    half_tr = 0.5 * (gxx + gyy)
    disc = np.hypot(0.5 * (gxx - gyy), gxy)
    lam1, lam2 = half_tr + disc, half_tr - disc
    if lam2 >= 1.0:
        return np.array([[gxx, gxy], [gxy, gyy]])
    # Rebuild with clamped eigenvalues (interpolation can slightly undershoot).
    if disc <= 1e-15:
        return np.eye(2) * max(lam1, 1.0)
    vx, vy = gxy, lam1 - gxx
    if np.hypot(vx, vy) < np.hypot(lam1 - gyy, gxy):
        vx, vy = lam1 - gyy, gxy
    n = np.hypot(vx, vy)
    vx, vy = vx / n, vy / n
    l1, l2 = max(lam1, 1.0), 1.0
    return np.array([
        [l1 * vx * vx + l2 * vy * vy, (l1 - l2) * vx * vy],
        [(l1 - l2) * vx * vy, l1 * vy * vy + l2 * vx * vx],
    ])


def riemannian_edge_lengths(field: MetricField, starts: np.ndarray,
                            ends: np.ndarray) -> np.ndarray:
    """Riemannian lengths of straight segments, vectorized over segments.

    Composite midpoint quadrature; the step obeys max(0.25 px, L/64) capped at
    1 px, which is converged because the metric varies at the integration
    scale rho >> 1 px.
    """
    a = np.atleast_2d(np.asarray(starts, dtype=np.float64))
    b = np.atleast_2d(np.asarray(ends, dtype=np.float64))
    d = b - a
    le = np.hypot(d[:, 0], d[:, 1])
    if field.is_identity:
        return le
    lmax = float(le.max(initial=0.0))
    if lmax == 0:
        return np.zeros(len(a))
    step = min(1.0, max(0.25, lmax / 64.0))
    n = max(1, int(np.ceil(lmax / step)))
    ts = (np.arange(n) + 0.5) / n
    # (nseg, n, 2) midpoint sample positions
    pts = a[:, None, :] + d[:, None, :] * ts[None, :, None]
    gxx, gxy, gyy = _coeffs_at(field, pts)
    dx = d[:, 0:1] / n
    dy = d[:, 1:2] / n
    quad = gxx * dx * dx + 2.0 * gxy * dx * dy + gyy * dy * dy
    return np.sqrt(np.maximum(quad, 0.0)).sum(axis=1)


def riemannian_edge_length(field: MetricField, u, v) -> float:
    """Riemannian length of the straight segment [u, v]."""
    return float(riemannian_edge_lengths(field, np.asarray(u, dtype=np.float64),
                                         np.asarray(v, dtype=np.float64))[0])


def riemannian_vertex_distance(field: MetricField, u, v) -> float:
    """Straight-chord stand-in for the Riemannian distance between points.

    Upper-bounds the true infimum over paths and lower-bounds nothing below
    the Euclidean distance (all eigenvalues >= 1), which is exactly what the
    conservative collision test needs.
    """
    return riemannian_edge_length(field, u, v)
