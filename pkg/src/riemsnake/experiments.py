"""Experiment drivers: segmentation runs, sweeps, benchmarks, artifacts.

Every driver takes a flat configuration dictionary (see DEFAULT_CONFIG),
writes deterministic CSV/SVG/PGM artifacts into an output directory, and
returns its headline numbers so callers (CLI, tests) can assert on them
without re-parsing files. Each artifact directory also receives an echo of
the fully resolved configuration.
"""

from __future__ import annotations

import math
import time
from pathlib import Path

import numpy as np
from scipy import ndimage

from .imageops import (
    NoiseSpec,
    add_gaussian_noise,
    bilinear_sample,
    ellipse_boundary,
    gen_disk,
    gen_ellipse,
    gaussian_blur,
    read_pgm,
    write_scaled_pgm,
)
from .metric import MetricParams, build_metric, identity_metric
from .snake import (
    ImageForceContext,
    ModelParams,
    SnakeModel,
    evolve,
    init_circle,
    init_rect,
    CSV_REPORT_HEADER,
)
from .svgout import write_svg
from .tensorfeat import (
    EstimatorParams,
    compute_features,
    curvature_sweep,
    naive_curvature,
    sweep_rows_to_csv,
)

__all__ = [
    "DEFAULT_CONFIG",
    "ConfigError",
    "parse_config",
    "load_config",
    "resolve_config",
    "build_pipeline",
    "segment_image",
    "run_segment",
    "run_curvature_sweep",
    "run_circle_lengths",
    "run_resolution",
    "run_topology",
    "run_bench",
    "make_vessel_tree",
]


class ConfigError(ValueError):
    """Raised for malformed key=value configuration input."""


# Estimator, metric and dynamics defaults shared by all experiments. Values
# are pixel units at the working scale of the synthetic scenes.
DEFAULT_CONFIG: dict[str, float | int | str] = {
    "sigma": 2.0,
    "rho": 10.0,
    "epsilon_fraction": 0.1,
    "s_ref_fraction": 0.9,      # s_ref = fraction of the image max of s
    "l_min": 0.5,
    "l_max": 25.0,
    "zeta": 2.5,
    "kappa_mask_fraction": 0.5,
    "alpha": 0.3,
    "beta": 3.0,
    "chi": 2.0,
    "tau": 10.0,
    "dt": 0.5,
    "damping": 0.9,
    "mass": 1.0,
    "tol": 0.02,
    "patience": 5,
    "max_iters": 2000,
    "seed": 0,
    "n_trials": 5,
}


def parse_config(text: str) -> dict:
    """Parse flat ``key = value`` lines; '#' starts a comment."""
    out: dict = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {ln}: empty key")
        out[key] = _coerce(value)
    return out


def _coerce(value: str):
    for conv in (int, float):
        try:
            return conv(value)
        except ValueError:
            pass
    return value


def load_config(path) -> dict:
    return parse_config(Path(path).read_text())


def resolve_config(overrides: dict | None = None, config_path=None) -> dict:
    """Defaults, then config file, then explicit overrides."""
    cfg = dict(DEFAULT_CONFIG)
    if config_path is not None:
        file_cfg = load_config(config_path)
        unknown = set(file_cfg) - set(DEFAULT_CONFIG)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    if overrides:
        cfg.update({k: v for k, v in overrides.items() if v is not None})
    return cfg


def _echo_config(cfg: dict, out_dir: Path) -> None:
    lines = [f"{k} = {cfg[k]}" for k in sorted(cfg)]
    (out_dir / "config_used.txt").write_text("\n".join(lines) + "\n")


def _out_dir(out) -> Path:
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


# ---------------------------------------------------------------------------
# Shared pipeline


def build_pipeline(img: np.ndarray, cfg: dict, uniform: bool = False,
                   kappa_max: float | None = None):
    """Image -> (features, metric, forces, model params).

    ``uniform`` swaps in the identity metric with the edge band anchored at
    ``l_min``: the classical evenly sampled model that must spend fine
    spacing everywhere to match the adaptive model's accuracy at corners.
    """
    features = compute_features(img, EstimatorParams(
        float(cfg["sigma"]), float(cfg["rho"]), float(cfg["epsilon_fraction"])))
    zeta = float(cfg["zeta"])
    if uniform:
        metric = identity_metric(img.shape)
        delta = float(cfg["l_min"])
    else:
        s_max = float(features.s.max())
        if s_max <= 0:
            raise ValueError("image has no contour response; cannot set s_ref")
        mp = MetricParams(
            s_ref=float(cfg["s_ref_fraction"]) * s_max,
            l_min=float(cfg["l_min"]), l_max=float(cfg["l_max"]),
            zeta=zeta, kappa_max=kappa_max,
            kappa_mask_fraction=float(cfg["kappa_mask_fraction"]))
        metric = build_metric(features, mp)
        delta = mp.delta
    params = ModelParams(
        delta=delta, zeta=zeta, mass=float(cfg["mass"]),
        damping=float(cfg["damping"]), dt=float(cfg["dt"]),
        alpha=float(cfg["alpha"]), beta=float(cfg["beta"]),
        chi=float(cfg["chi"]), tau=float(cfg["tau"]),
        tol=float(cfg["tol"]), patience=int(cfg["patience"]))
    ctx = ImageForceContext.build(img, features, tau=float(cfg["tau"]))
    return features, metric, ctx, params


def _snapshot_writer(out_dir: Path, snapshot_every: int):
    if snapshot_every <= 0:
        return 0, None

    def cb(model: SnakeModel, iteration: int) -> None:
        write_svg(model, out_dir / f"snapshot_{iteration:05d}.svg")

    return snapshot_every, cb


def segment_image(img: np.ndarray, cfg: dict, uniform: bool = False,
                  init: SnakeModel | None = None, out_dir: Path | None = None,
                  snapshot_every: int = 0):
    """Full pipeline on one image; returns (model, report).

    Default initialization is a rectangle just inside the image border,
    deflating onto the scene content.
    """
    features, metric, ctx, params = build_pipeline(img, cfg, uniform=uniform)
    if init is None:
        h, w = img.shape
        model = init_rect((2.0, 2.0, w - 3.0, h - 3.0), metric, params, ctx)
    else:
        model = SnakeModel(init.curves, metric, params, ctx)
    every, cb = _snapshot_writer(out_dir, snapshot_every) if out_dir else (0, None)
    report = evolve(model, max_iters=int(cfg["max_iters"]),
                    snapshot_every=every, snapshot_cb=cb)
    if out_dir is not None:
        write_svg(model, out_dir / "final.svg")
        (out_dir / "report.csv").write_text(
            CSV_REPORT_HEADER + "\n" + report.csv_row() + "\n")
        write_scaled_pgm(
            (features.s >= float(cfg["s_ref_fraction"]) * float(features.s.max()))
            .astype(float), out_dir / "s_threshold.pgm")
    return model, report


# ---------------------------------------------------------------------------
# Commands


def run_segment(image_path, out, cfg: dict, uniform: bool = False,
                snapshot_every: int = 0):
    out_dir = _out_dir(out)
    img = read_pgm(image_path)
    _echo_config(cfg, out_dir)
    model, report = segment_image(img, cfg, uniform=uniform, out_dir=out_dir,
                                  snapshot_every=snapshot_every)
    return model, report


SWEEP_RADII = (10.0, 15.0, 20.0, 25.0, 32.0, 40.0, 60.0)
PROFILE_HEADER = "radius_px,tensor_kappa,naive_kappa"


def run_curvature_sweep(out, cfg: dict,
                        radii=SWEEP_RADII,
                        sigmas=(2.0, 5.0, 10.0),
                        rhos=(5.0, 10.0, 20.0),
                        psnr_dbs=(math.inf, 20.0, 10.0)):
    """Disk-radius sweep of both estimators plus an off-contour profile."""
    out_dir = _out_dir(out)
    _echo_config(cfg, out_dir)
    size = 200
    center = (size / 2, size / 2)
    rows = []
    for r in radii:
        ts = np.linspace(0, 2 * np.pi, 90, endpoint=False)
        pts, _ = ellipse_boundary(center, (r, r), 0.0, ts)
        rows.extend(curvature_sweep(
            make_image=lambda r=r: gen_disk(size, center, r),
            boundary_pts=pts, true_kappas=1.0 / r,
            sigmas=sigmas, rhos=rhos, psnr_dbs=psnr_dbs,
            n_trials=int(cfg["n_trials"]), seed=int(cfg["seed"])))
    (out_dir / "sweep.csv").write_text(sweep_rows_to_csv(rows))

    # Radial profile of both estimators on one noisy disk: the naive
    # divergence estimator explodes away from the contour, ours decays.
    r0 = 25.0
    img = add_gaussian_noise(gen_disk(size, center, r0),
                             NoiseSpec(20.0, seed=int(cfg["seed"])))
    p = EstimatorParams(float(cfg["sigma"]), float(cfg["rho"]),
                        float(cfg["epsilon_fraction"]))
    tensor_k = compute_features(img, p).kappa
    naive_k = np.abs(naive_curvature(img, p.sigma))
    prof = [PROFILE_HEADER]
    for rr in np.arange(0.0, size / 2 - 2, 1.0):
        pt = np.array([center[0] + rr, center[1]])
        prof.append(f"{rr:.1f},{float(bilinear_sample(tensor_k, pt)):.9g},"
                    f"{float(bilinear_sample(naive_k, pt)):.9g}")
    (out_dir / "radial_profile.csv").write_text("\n".join(prof) + "\n")
    return rows


CIRCLE_RADII = (8.0, 12.0, 16.0, 24.0, 32.0, 48.0, 64.0, 96.0)
CIRCLE_HEADER = ("radius,true_kappa,mean_edge_length,min_edge_length,"
                 "max_edge_length,l_min,zeta_delta,n_vertices,iterations,converged")


def run_circle_lengths(out, cfg: dict, radii=CIRCLE_RADII):
    """Converged Euclidean edge length against the radius of curvature.

    The curvature scale is pinned to the smallest radius of the sweep so all
    runs share one metric law; otherwise every disk would sit at its own
    kappa_max and the lengths would not be comparable.
    """
    out_dir = _out_dir(out)
    _echo_config(cfg, out_dir)
    kappa_max = 1.0 / min(radii)
    lines = [CIRCLE_HEADER]
    results = []
    for r in radii:
        size = int(max(120, math.ceil(4 * r)))
        center = (size / 2, size / 2)
        img = gen_disk(size, center, r)
        features, metric, ctx, params = build_pipeline(img, cfg,
                                                       kappa_max=kappa_max)
        model = init_circle(center, min(1.6 * r, size / 2 - 4), metric, params, ctx)
        report = evolve(model, max_iters=int(cfg["max_iters"]))
        edges = np.concatenate([c.edge_euclidean_lengths() for c in model.curves])
        row = {
            "radius": r, "true_kappa": 1.0 / r,
            "mean_edge_length": float(edges.mean()),
            "min_edge_length": float(edges.min()),
            "max_edge_length": float(edges.max()),
            "l_min": float(cfg["l_min"]),
            "zeta_delta": float(cfg["l_max"]),
            "n_vertices": report.n_vertices,
            "iterations": report.iterations,
            "converged": report.converged,
        }
        results.append(row)
        lines.append(
            f"{r:g},{1.0 / r:.9g},{row['mean_edge_length']:.9g},"
            f"{row['min_edge_length']:.9g},{row['max_edge_length']:.9g},"
            f"{row['l_min']:g},{row['zeta_delta']:g},{row['n_vertices']},"
            f"{row['iterations']},{int(row['converged'])}")
    (out_dir / "circle_lengths.csv").write_text("\n".join(lines) + "\n")
    return results


RESOLUTIONS = (50, 100, 200, 400)
RESOLUTION_HEADER = ("resolution,n_vertices,iterations,converged,"
                     "control_n_vertices,control_iterations")
_BASE_RESOLUTION = 100


def run_resolution(out, cfg: dict, resolutions=RESOLUTIONS):
    """One physical scene sampled at several grid resolutions.

    All length-like parameters are given at the 100 px reference resolution
    and rescaled with the grid, so the adaptive model sees the same physical
    problem each time. The control reruns with the identity metric and a
    fixed pixel-scale band, whose vertex count must track the perimeter in
    pixels instead of staying constant.
    """
    out_dir = _out_dir(out)
    _echo_config(cfg, out_dir)
    lines = [RESOLUTION_HEADER]
    results = []
    for n in resolutions:
        f = n / _BASE_RESOLUTION
        scaled = dict(cfg)
        for key in ("sigma", "rho", "l_min", "l_max", "tau"):
            scaled[key] = float(cfg[key]) * f
        img = gen_ellipse(n, (n / 2, n / 2), (0.35 * n, 0.18 * n))
        features, metric, ctx, params = build_pipeline(img, scaled)
        model = init_circle((n / 2, n / 2), 0.45 * n, metric, params, ctx)
        report = evolve(model, max_iters=int(cfg["max_iters"]))

        control = dict(cfg)
        control["chi"] = float(cfg["chi"])
        _, cmetric, cctx, cparams = build_pipeline(img, control, uniform=True)
        cparams = ModelParams(
            delta=float(cfg["l_max"]) / float(cfg["zeta"]), zeta=float(cfg["zeta"]),
            mass=cparams.mass, damping=cparams.damping, dt=cparams.dt,
            alpha=cparams.alpha, beta=cparams.beta, chi=cparams.chi,
            tau=cparams.tau, tol=cparams.tol, patience=cparams.patience)
        cmodel = init_circle((n / 2, n / 2), 0.45 * n, cmetric, cparams, cctx)
        creport = evolve(cmodel, max_iters=int(cfg["max_iters"]))

        results.append({"resolution": n, "n_vertices": report.n_vertices,
                        "iterations": report.iterations,
                        "converged": report.converged,
                        "control_n_vertices": creport.n_vertices,
                        "control_iterations": creport.iterations})
        lines.append(f"{n},{report.n_vertices},{report.iterations},"
                     f"{int(report.converged)},{creport.n_vertices},"
                     f"{creport.iterations}")
    (out_dir / "resolution.csv").write_text("\n".join(lines) + "\n")
    return results


# ---------------------------------------------------------------------------
# Topology scenes


def make_vessel_tree(size: int, n_branches: int, seed: int,
                     fg: float = 255.0) -> np.ndarray:
    """Random bright strokes of varying width on a dark background.

    Branches are straight segments grown from random roots; widths taper per
    branch. Some strokes overlap into one connected component, others stay
    separate, so the component count varies with the seed.
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size].astype(float)
    img = np.zeros((size, size))
    for _ in range(n_branches):
        a = rng.uniform(0.15 * size, 0.85 * size, size=2)
        angle = rng.uniform(0, 2 * np.pi)
        length = rng.uniform(0.2 * size, 0.45 * size)
        b = a + length * np.array([np.cos(angle), np.sin(angle)])
        b = np.clip(b, 0.12 * size, 0.88 * size)
        width = rng.uniform(0.02 * size, 0.045 * size)
        ab = b - a
        denom = float(ab @ ab)
        if denom == 0:
            continue
        t = np.clip(((xx - a[0]) * ab[0] + (yy - a[1]) * ab[1]) / denom, 0, 1)
        dist = np.hypot(xx - (a[0] + t * ab[0]), yy - (a[1] + t * ab[1]))
        img = np.maximum(img, fg * np.clip(width - dist + 0.5, 0, 1))
    return gaussian_blur(img, 1.0)


def _component_seeds(img: np.ndarray, threshold: float):
    """One interior seed point and radius per connected bright component."""
    labels, count = ndimage.label(img > threshold)
    seeds = []
    inside = ndimage.distance_transform_edt(img > threshold)
    for k in range(1, count + 1):
        masked = np.where(labels == k, inside, 0.0)
        y, x = np.unravel_index(np.argmax(masked), masked.shape)
        seeds.append(((float(x), float(y)), float(masked[y, x])))
    return seeds, count


TOPOLOGY_HEADER = "scene,n_curves,expected,converged,iterations"


def _topology_scenes(cfg: dict):
    """Scene name -> (image, list of (center, radius, orientation), overrides)."""
    split_img = np.minimum(gen_disk(200, (60, 100), 25)
                           + gen_disk(200, (140, 100), 25), 255)
    ring = gen_disk(200, (100, 100), 45) - gen_disk(200, (100, 100), 25)
    return {
        "split": (split_img, [((100, 100), 90, 1)],
                  {"tau": 30.0, "rho": 5.0, "l_max": 12.5}, 2),
        "merge": (gen_disk(200, (100, 100), 55),
                  [((70, 100), 15, 1), ((130, 100), 15, 1)],
                  {"tau": 30.0, "rho": 5.0, "l_max": 12.5}, 1),
        "annulus": (ring, [((100, 100), 80, 1), ((100, 100), 18, -1)],
                    {"tau": 12.0, "rho": 5.0, "l_max": 12.5}, 2),
    }


def run_topology(out, cfg: dict, snapshot_every: int = 0,
                 include_vessels: bool = True):
    """Canonical split/merge/annulus scenes plus a synthetic vessel tree."""
    out_dir = _out_dir(out)
    _echo_config(cfg, out_dir)
    lines = [TOPOLOGY_HEADER]
    results = []
    scenes = _topology_scenes(cfg)
    for name, (img, inits, overrides, expected) in scenes.items():
        scfg = dict(cfg)
        scfg.update(overrides)
        features, metric, ctx, params = build_pipeline(img, scfg)
        model = None
        for center, radius, orientation in inits:
            part = init_circle(center, radius, metric, params, ctx,
                               orientation=orientation)
            if model is None:
                model = part
            else:
                model.curves += part.curves
        every, cb = _snapshot_writer(out_dir / name, snapshot_every)
        if every:
            (out_dir / name).mkdir(exist_ok=True)
        report = evolve(model, max_iters=int(cfg["max_iters"]),
                        snapshot_every=every, snapshot_cb=cb)
        write_svg(model, out_dir / f"{name}.svg")
        results.append({"scene": name, "n_curves": len(model.curves),
                        "expected": expected, "converged": report.converged,
                        "iterations": report.iterations})
        lines.append(f"{name},{len(model.curves)},{expected},"
                     f"{int(report.converged)},{report.iterations}")

    if include_vessels:
        img = make_vessel_tree(200, n_branches=5, seed=int(cfg["seed"]))
        seeds, expected = _component_seeds(img, threshold=64.0)
        scfg = dict(cfg)
        scfg.update({"tau": 8.0, "rho": 4.0, "l_max": 12.5})
        features, metric, ctx, params = build_pipeline(img, scfg)
        model = None
        for (center, inner_radius) in seeds:
            radius = max(2.0, 0.6 * inner_radius)
            part = init_circle(center, radius, metric, params, ctx)
            if model is None:
                model = part
            else:
                model.curves += part.curves
        report = evolve(model, max_iters=int(cfg["max_iters"]))
        write_svg(model, out_dir / "vessels.svg")
        results.append({"scene": "vessels", "n_curves": len(model.curves),
                        "expected": expected, "converged": report.converged,
                        "iterations": report.iterations})
        lines.append(f"vessels,{len(model.curves)},{expected},"
                     f"{int(report.converged)},{report.iterations}")

    (out_dir / "topology.csv").write_text("\n".join(lines) + "\n")
    return results


# ---------------------------------------------------------------------------
# Benchmarks


BENCH_BUILD_HEADER = "size,n_pixels,median_build_seconds"
BENCH_EVOLVE_HEADER = ("mode,n_vertices,iterations,converged,"
                       "evolve_seconds,metric_seconds")


def run_bench(out, cfg: dict, sizes=(100, 150, 200, 250, 300, 350, 400),
              repeats: int = 5, include_evolve: bool = True):
    """Metric build timing over image sizes, plus adaptive-vs-uniform."""
    out_dir = _out_dir(out)
    _echo_config(cfg, out_dir)
    build_lines = [BENCH_BUILD_HEADER]
    build_rows = []
    for n in sizes:
        img = gen_disk(n, (n / 2, n / 2), 0.3 * n)
        p = EstimatorParams(float(cfg["sigma"]), float(cfg["rho"]),
                            float(cfg["epsilon_fraction"]))
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            features = compute_features(img, p)
            mp = MetricParams(s_ref=0.9 * float(features.s.max()),
                              l_min=float(cfg["l_min"]),
                              l_max=float(cfg["l_max"]),
                              zeta=float(cfg["zeta"]))
            build_metric(features, mp)
            times.append(time.perf_counter() - t0)
        med = float(np.median(times))
        build_rows.append({"size": n, "n_pixels": n * n, "seconds": med})
        build_lines.append(f"{n},{n * n},{med:.6f}")
    (out_dir / "bench_build.csv").write_text("\n".join(build_lines) + "\n")
    if not include_evolve:
        return build_rows, []

    img = gen_ellipse(240, (120, 120), (70, 35))
    evolve_lines = [BENCH_EVOLVE_HEADER]
    evolve_rows = []
    # Wide local-mean scale so the deflation drive reaches the faraway init
    # circle; the fine uniform model has no useful tension to fall back on.
    scfg = dict(cfg)
    scfg["tau"] = 30.0
    for mode, uniform in (("adaptive", False), ("uniform", True)):
        t0 = time.perf_counter()
        features, metric, ctx, params = build_pipeline(img, scfg, uniform=uniform)
        metric_s = time.perf_counter() - t0
        model = init_circle((120, 120), 100, metric, params, ctx)
        t0 = time.perf_counter()
        report = evolve(model, max_iters=int(cfg["max_iters"]))
        evolve_s = time.perf_counter() - t0
        evolve_rows.append({"mode": mode, "n_vertices": report.n_vertices,
                            "iterations": report.iterations,
                            "converged": report.converged,
                            "evolve_seconds": evolve_s,
                            "metric_seconds": metric_s,
                            "model": model})
        evolve_lines.append(f"{mode},{report.n_vertices},{report.iterations},"
                            f"{int(report.converged)},{evolve_s:.6f},"
                            f"{metric_s:.6f}")
    (out_dir / "bench_evolve.csv").write_text("\n".join(evolve_lines) + "\n")
    return build_rows, evolve_rows
