"""Curvature from the gradient structure tensor, against ground truth.

A disk of radius r has curvature 1/r everywhere on its boundary. We build
synthetic disks, estimate curvature with the stabilized tensor estimator and
with the naive divergence-of-unit-gradient formula, and compare both along
the analytic boundary. Then we add noise and look 25 px away from the
contour, where the naive estimator falls apart and the tensor one stays
quiet.

Run: python3 demos/01_curvature_estimator.py
"""

import numpy as np

from riemsnake.imageops import (
    NoiseSpec, add_gaussian_noise, bilinear_sample, ellipse_boundary, gen_disk,
)
from riemsnake.tensorfeat import EstimatorParams, compute_features, naive_curvature


def boundary(center, r, n=90):
    pts, _ = ellipse_boundary(center, (r, r), 0.0,
                              np.linspace(0, 2 * np.pi, n, endpoint=False))
    return pts


def main():
    p = EstimatorParams(sigma=2.0, rho=10.0)
    print("radius   true kappa   tensor       naive")
    for r in (15, 25, 40):
        img = gen_disk(200, (100, 100), r)
        pts = boundary((100, 100), r)
        tens = bilinear_sample(compute_features(img, p).kappa, pts).mean()
        naive = bilinear_sample(np.abs(naive_curvature(img, p.sigma)), pts).mean()
        print(f"{r:6d}   {1 / r:.5f}      {tens:.5f}      {naive:.5f}")

    print()
    print("Off-contour, 20 dB noise (max |kappa| at >= 25 px from the edge):")
    noisy = add_gaussian_noise(gen_disk(200, (100, 100), 40), NoiseSpec(20.0, seed=0))
    q = EstimatorParams(sigma=2.0, rho=5.0)
    yy, xx = np.mgrid[0:200, 0:200].astype(float)
    far = np.abs(np.hypot(xx - 100, yy - 100) - 40) >= 25
    tens = compute_features(noisy, q).kappa[far].max()
    naive = np.abs(naive_curvature(noisy, q.sigma))[far].max()
    print(f"  tensor estimator: {tens:.2e}   (stabilized toward 0)")
    print(f"  naive estimator:  {naive:.2e}   ({naive / tens:.0f}x larger)")


if __name__ == "__main__":
    main()
