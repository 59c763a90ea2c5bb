"""From image features to an adaptive sampling metric.

The metric stretches space near strong, curved contours: Riemannian edge
lengths are kept inside a fixed band, so where the metric magnifies,
Euclidean spacing shrinks. We build the metric for an ellipse, then place a
contour on the boundary and report how the Euclidean spacing varies between
the flat sides and the tight tips.

Run: python3 demos/02_metric_and_sampling.py
"""

import numpy as np

from riemsnake.imageops import gen_ellipse
from riemsnake.metric import MetricParams, build_metric
from riemsnake.snake import ModelParams, init_circle
from riemsnake.tensorfeat import EstimatorParams, compute_features


def main():
    img = gen_ellipse(240, (120, 120), (70, 35))
    features = compute_features(img, EstimatorParams(sigma=2.0, rho=10.0))
    mp = MetricParams(s_ref=0.9 * float(features.s.max()), l_min=0.5, l_max=25.0)
    metric = build_metric(features, mp)
    print(f"kappa_max detected: {metric.kappa_max:.4f} "
          f"(tip truth {70 / 35**2:.4f}), kappa_ref {metric.kappa_ref_value:.5f}")
    print(f"metric magnification mu1 range: 1 .. {metric.mu1.max():.0f}")

    params = ModelParams(delta=mp.delta, zeta=mp.zeta)
    model = init_circle((120, 120), 100, metric, params)
    curve = model.curves[0]
    print(f"\ninit circle r=100 carries {len(curve)} vertices after resampling")

    # Sample the metric's effect along the analytic ellipse boundary itself.
    ts = np.linspace(0, 2 * np.pi, 400, endpoint=False)
    pts = np.stack([120 + 70 * np.cos(ts), 120 + 35 * np.sin(ts)], axis=1)
    from riemsnake.metric import riemannian_edge_lengths
    steps = riemannian_edge_lengths(metric, pts, np.roll(pts, -1, axis=0))
    euclid = np.hypot(*(np.roll(pts, -1, axis=0) - pts).T)
    magnify = steps / euclid
    print("Riemannian magnification on the boundary: "
          f"tips ~{magnify.max():.1f}x, sides ~{magnify.min():.1f}x")
    print("=> converged edges will be that many times shorter at the tips.")


if __name__ == "__main__":
    main()
