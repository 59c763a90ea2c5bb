"""Deformable contour model with metric-driven resampling and topology surgery.

A model is a set of closed oriented polygonal curves. Every edge is kept at a
Riemannian length within [delta, zeta*delta]; where the metric expands space
(strong, curved contours) this makes edges short in Euclidean terms, elsewhere
they stay long. Vertices move under Newtonian dynamics with damping. Pairs of
non-neighbor vertices that come closer than the collision threshold trigger a
reconnection that splits one curve in two or merges two curves into one.

Orientation convention: curves are stored with positive signed area
(shoelace), i.e. the interior lies on the left of traversal in (x, y)
coordinates; the outward vertex normal is the tangent rotated by -90 degrees.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .imageops import bilinear_sample, gaussian_blur, gradient
from .metric import MetricField, riemannian_edge_lengths, riemannian_edge_length
from .quadtree import Quadtree
from .tensorfeat import ContourFeatures

__all__ = [
    "ModelParams",
    "Curve",
    "SnakeModel",
    "ImageForceContext",
    "ConvergenceReport",
    "TopologyError",
    "init_circle",
    "init_rect",
    "resample",
    "compute_forces",
    "step",
    "detect_collisions",
    "resolve_collisions",
    "evolve",
]


class TopologyError(RuntimeError):
    """Raised when collision resolution cannot reach a consistent state."""


@dataclass
class ModelParams:
    """Dynamics and resampling constants.

    ``delta``/``zeta`` define the Riemannian edge-length band
    [delta, zeta*delta]. Forces: ``alpha`` spring toward the neighbor
    midpoint, ``beta`` attraction along the gradient of the edge-strength
    potential, ``chi`` inflation along the outward normal gated by the local
    gray level minus its ``tau``-scale mean, and damping ``damping`` (in
    (0, 1] acts like a fractional velocity decay per step).
    """

    delta: float
    zeta: float = 2.5
    mass: float = 1.0
    damping: float = 0.7
    dt: float = 0.5
    d_cap: float | None = None
    alpha: float = 0.05
    beta: float = 1.0
    chi: float = 0.0
    tau: float = 10.0
    tol: float = 0.02
    patience: int = 5
    max_resample_passes: int = 30

    def __post_init__(self):
        if self.delta <= 0 or self.zeta <= 2:
            raise ValueError("need delta > 0 and zeta > 2")
        if self.mass <= 0 or self.dt <= 0 or self.damping < 0 or self.patience < 1:
            raise ValueError("invalid dynamics parameters")
        if self.d_cap is None:
            self.d_cap = self.delta / 2.0
        if self.d_cap <= 0:
            raise ValueError("d_cap must be positive")


class Curve:
    """Closed vertex ring stored as (n, 2) position and velocity arrays."""

    def __init__(self, pos: np.ndarray, vel: np.ndarray | None = None):
        self.pos = np.asarray(pos, dtype=np.float64).reshape(-1, 2).copy()
        self.vel = (np.zeros_like(self.pos) if vel is None
                    else np.asarray(vel, dtype=np.float64).reshape(-1, 2).copy())

    def __len__(self):
        return len(self.pos)

    def signed_area(self) -> float:
        x, y = self.pos[:, 0], self.pos[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        return 0.5 * float(np.sum(x * yn - xn * y))

    def contains(self, pt) -> bool:
        """Even-odd point-in-polygon test."""
        x, y = float(pt[0]), float(pt[1])
        px, py = self.pos[:, 0], self.pos[:, 1]
        qx, qy = np.roll(px, -1), np.roll(py, -1)
        crossing = ((py > y) != (qy > y))
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = px + (y - py) / np.where(qy != py, qy - py, 1.0) * (qx - px)
        return bool(np.sum(crossing & (x < xint)) % 2)

    def edge_euclidean_lengths(self) -> np.ndarray:
        d = np.roll(self.pos, -1, axis=0) - self.pos
        return np.hypot(d[:, 0], d[:, 1])

    def outward_normals(self) -> np.ndarray:
        t = np.roll(self.pos, -1, axis=0) - np.roll(self.pos, 1, axis=0)
        n = np.stack([t[:, 1], -t[:, 0]], axis=1)
        norm = np.hypot(n[:, 0], n[:, 1])
        norm = np.where(norm > 0, norm, 1.0)
        return n / norm[:, None]


@dataclass
class ImageForceContext:
    """Precomputed image fields shared by all force evaluations.

    ``potential`` is the edge-strength potential (squared contour strength)
    normalized to peak 1 so force coefficients stay image-scale free;
    ``px``/``py`` its gradient. ``intensity``/``local_mean`` feed the
    inflation force, normalized by the image amplitude.
    """

    potential: np.ndarray
    px: np.ndarray
    py: np.ndarray
    intensity: np.ndarray
    local_mean: np.ndarray

    @classmethod
    def build(cls, image: np.ndarray, features: ContourFeatures, tau: float):
        pot = features.s ** 2
        peak = float(pot.max(initial=0.0))
        if peak > 0:
            pot = pot / peak
        px, py = gradient(pot)
        amp = float(image.max() - image.min())
        norm = image / amp if amp > 0 else image
        return cls(pot, px, py, norm, gaussian_blur(norm, tau))


class SnakeModel:
    """Curve set plus its metric, parameters and dynamics state."""

    def __init__(self, curves: list[Curve], metric: MetricField, params: ModelParams,
                 forces: ImageForceContext | None = None):
        self.curves = curves
        self.metric = metric
        self.params = params
        self.forces = forces
        self.iteration = 0
        self.d_max_last = params.d_cap

    @property
    def width(self):
        return self.metric.shape[1]

    @property
    def height(self):
        return self.metric.shape[0]

    def n_vertices(self) -> int:
        return sum(len(c) for c in self.curves)

    def all_positions(self) -> np.ndarray:
        if not self.curves:
            return np.zeros((0, 2))
        return np.concatenate([c.pos for c in self.curves], axis=0)

    def edge_riemannian_lengths(self, curve: Curve) -> np.ndarray:
        return riemannian_edge_lengths(self.metric, curve.pos,
                                       np.roll(curve.pos, -1, axis=0))


# ---------------------------------------------------------------------------
# Initialization


def _ring_from_samples(samples: np.ndarray, model_shape, metric, params) -> Curve:
    h, w = model_shape
    if (samples[:, 0].min() < 0 or samples[:, 1].min() < 0
            or samples[:, 0].max() > w - 1 or samples[:, 1].max() > h - 1):
        raise ValueError("initial shape exceeds image bounds")
    return Curve(samples)


def _init_spacing(params: ModelParams) -> float:
    # Geometric mean of the band keeps fresh edges away from both thresholds.
    return params.delta * np.sqrt(params.zeta)


def init_circle(center, radius: float, metric: MetricField,
                params: ModelParams, forces: ImageForceContext | None = None,
                orientation: int = 1) -> SnakeModel:
    """One closed circle ring, resampled into the edge band.

    ``orientation=1`` encloses interior (positive signed area);
    ``orientation=-1`` builds a hole boundary (model interior outside the
    ring), which flips the outward normal used by the inflation force.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    n = max(3, int(np.ceil(2 * np.pi * radius / _init_spacing(params))))
    ts = orientation * 2 * np.pi * np.arange(n) / n
    pts = np.stack([center[0] + radius * np.cos(ts),
                    center[1] + radius * np.sin(ts)], axis=1)
    curve = _ring_from_samples(pts, metric.shape, metric, params)
    model = SnakeModel([curve], metric, params, forces)
    resample(model)
    if not model.curves:
        raise ValueError("circle too small to carry at least 3 in-band edges")
    return model


def init_rect(bounds, metric: MetricField, params: ModelParams,
              forces: ImageForceContext | None = None) -> SnakeModel:
    """Axis-aligned rectangle ring (x0, y0, x1, y1), positively oriented."""
    x0, y0, x1, y1 = bounds
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"degenerate rectangle {bounds}")
    spacing = _init_spacing(params)
    corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    pts = []
    for (ax, ay), (bx, by) in zip(corners, corners[1:] + corners[:1]):
        n = max(1, int(np.ceil(np.hypot(bx - ax, by - ay) / spacing)))
        for k in range(n):
            t = k / n
            pts.append((ax + t * (bx - ax), ay + t * (by - ay)))
    curve = _ring_from_samples(np.array(pts), metric.shape, metric, params)
    model = SnakeModel([curve], metric, params, forces)
    resample(model)
    if not model.curves:
        raise ValueError("rectangle too small to carry at least 3 in-band edges")
    return model


# ---------------------------------------------------------------------------
# Resampling


def _resample_curve(model: SnakeModel, curve: Curve) -> tuple[Curve | None, bool]:
    """One split+contract pass; returns (curve or None if vanished, changed)."""
    p = model.params
    hi = p.zeta * p.delta
    lo = p.delta
    changed = False

    lengths = model.edge_riemannian_lengths(curve)
    if np.any(lengths > hi):
        pos_out, vel_out = [], []
        nxt_pos = np.roll(curve.pos, -1, axis=0)
        nxt_vel = np.roll(curve.vel, -1, axis=0)
        for i in range(len(curve)):
            pos_out.append(curve.pos[i])
            vel_out.append(curve.vel[i])
            if lengths[i] > hi:
                pos_out.append(0.5 * (curve.pos[i] + nxt_pos[i]))
                vel_out.append(0.5 * (curve.vel[i] + nxt_vel[i]))
        curve = Curve(np.array(pos_out), np.array(vel_out))
        changed = True
        lengths = model.edge_riemannian_lengths(curve)

    if np.any(lengths < lo):
        pos_out, vel_out = [], []
        i = 0
        n = len(curve)
        while i < n:
            if i + 1 < n and lengths[i] < lo:
                pos_out.append(0.5 * (curve.pos[i] + curve.pos[i + 1]))
                vel_out.append(0.5 * (curve.vel[i] + curve.vel[i + 1]))
                i += 2
                changed = True
            elif i == n - 1 and lengths[i] < lo and len(pos_out) > 0:
                # Closing edge (last -> first): merge into the first output vertex.
                pos_out[0] = 0.5 * (curve.pos[i] + pos_out[0])
                vel_out[0] = 0.5 * (curve.vel[i] + vel_out[0])
                i += 1
                changed = True
            else:
                pos_out.append(curve.pos[i])
                vel_out.append(curve.vel[i])
                i += 1
        curve = Curve(np.array(pos_out), np.array(vel_out))

    if len(curve) < 3:
        return None, True
    return curve, changed


def resample(model: SnakeModel) -> bool:
    """Split/contract every curve until all edges sit in the band (fixpoint).

    Returns True when a fixpoint was reached within the pass budget; curves
    shrinking below 3 vertices are dropped as vanishing components.
    """
    for _ in range(model.params.max_resample_passes):
        any_change = False
        out: list[Curve] = []
        for curve in model.curves:
            new_curve, changed = _resample_curve(model, curve)
            any_change = any_change or changed
            if new_curve is not None:
                out.append(new_curve)
        model.curves = out
        if not any_change:
            return True
    return False


# ---------------------------------------------------------------------------
# Forces and integration


def compute_forces(model: SnakeModel) -> list[np.ndarray]:
    """Per-curve (n, 2) force arrays for the current positions."""
    p = model.params
    ctx = model.forces
    out = []
    for curve in model.curves:
        pos = curve.pos
        mid = 0.5 * (np.roll(pos, 1, axis=0) + np.roll(pos, -1, axis=0))
        f = p.alpha * (mid - pos)
        if ctx is not None and p.beta != 0.0:
            f[:, 0] += p.beta * bilinear_sample(ctx.px, pos)
            f[:, 1] += p.beta * bilinear_sample(ctx.py, pos)
        if ctx is not None and p.chi != 0.0:
            drive = bilinear_sample(ctx.intensity, pos) - bilinear_sample(ctx.local_mean, pos)
            f += (p.chi * drive)[:, None] * curve.outward_normals()
        f -= (p.damping * p.mass / p.dt) * curve.vel
        out.append(f)
    return out


def step(model: SnakeModel, forces: list[np.ndarray] | None = None) -> None:
    """Semi-implicit Euler step, then resample, then resolve collisions."""
    if forces is None:
        forces = compute_forces(model)
    p = model.params
    w, h = model.width, model.height
    d_max = 0.0
    for curve, f in zip(model.curves, forces):
        curve.vel += (p.dt / p.mass) * f
        disp = p.dt * np.hypot(curve.vel[:, 0], curve.vel[:, 1])
        over = disp > p.d_cap
        if np.any(over):
            curve.vel[over] *= (p.d_cap / disp[over])[:, None]
            disp = np.minimum(disp, p.d_cap)
        curve.pos += p.dt * curve.vel
        np.clip(curve.pos[:, 0], 0.0, w - 1.0, out=curve.pos[:, 0])
        np.clip(curve.pos[:, 1], 0.0, h - 1.0, out=curve.pos[:, 1])
        if len(disp):
            d_max = max(d_max, float(disp.max()))
    model.d_max_last = d_max
    model.iteration += 1
    resample(model)
    pairs = detect_collisions(model)
    if pairs:
        resolve_collisions(model, pairs)


# ---------------------------------------------------------------------------
# Collision detection and surgery


def collision_threshold(model: SnakeModel) -> float:
    return 0.5 * (model.params.zeta * model.params.delta + model.d_max_last)


def _ring_distance(i: int, j: int, n: int) -> int:
    d = abs(i - j)
    return min(d, n - d)


def detect_collisions(model: SnakeModel):
    """Pairs of non-neighbor vertices within the Riemannian collision radius.

    Candidates come from a quadtree range query with the same Euclidean
    radius, which is sound because the chord Riemannian distance never falls
    below the Euclidean one. Pairs are ((ci, vi), (cj, vj), distance), sorted
    by distance. Ring distance must exceed 2 for same-curve pairs.
    """
    threshold = collision_threshold(model)
    pts = model.all_positions()
    if len(pts) < 2:
        return []
    owner = []
    for ci, curve in enumerate(model.curves):
        owner.extend((ci, vi) for vi in range(len(curve)))
    tree = Quadtree(pts)
    cand_a, cand_b = [], []
    for gi in range(len(pts)):
        ci, vi = owner[gi]
        n_i = len(model.curves[ci])
        for gj in tree.query_circle(pts[gi], threshold):
            if gj <= gi:
                continue
            cj, vj = owner[gj]
            if ci == cj and _ring_distance(vi, vj, n_i) <= 2:
                continue
            cand_a.append(gi)
            cand_b.append(gj)
    if not cand_a:
        return []
    dists = riemannian_edge_lengths(model.metric, pts[cand_a], pts[cand_b])
    pairs = [(owner[a], owner[b], float(d))
             for a, b, d in zip(cand_a, cand_b, dists) if d <= threshold]
    pairs.sort(key=lambda t: t[2])
    return pairs


def _substantial(curve: Curve, params: ModelParams) -> bool:
    """Whether a surgery product is worth keeping.

    Splitting two arcs that run close together produces thin slivers whose
    mean width is below the collision radius. Such a curve cannot represent
    anything the model resolves and, left alive, it feeds an endless
    split/merge cycle. Area over perimeter approximates half the mean width.
    """
    if len(curve) < 3:
        return False
    perim = float(curve.edge_euclidean_lengths().sum())
    if perim == 0.0:
        return False
    return abs(curve.signed_area()) >= 0.5 * params.zeta * params.delta * perim


def _apply_surgery(model: SnakeModel, u, v) -> None:
    """Remove the colliding vertices and cross-reconnect their neighbors.

    Same curve: the ring splits into the two arcs strictly between u and v.
    Different curves: the rings merge into one. Both cases preserve the
    traversal orientation of every surviving arc. Products thinner than the
    model resolution are culled.
    """
    (ci, vi), (cj, vj) = u, v
    if ci == cj:
        c = model.curves[ci]
        i, j = sorted((vi, vj))
        a_pos, a_vel = c.pos[i + 1:j], c.vel[i + 1:j]
        b_pos = np.concatenate([c.pos[j + 1:], c.pos[:i]], axis=0)
        b_vel = np.concatenate([c.vel[j + 1:], c.vel[:i]], axis=0)
        replacement = [cv for cv in (Curve(a_pos, a_vel), Curve(b_pos, b_vel))
                       if _substantial(cv, model.params)]
        model.curves = (model.curves[:ci] + replacement + model.curves[ci + 1:])
    else:
        ca, cb = model.curves[ci], model.curves[cj]
        i, j = vi, vj
        pos = np.concatenate([cb.pos[j + 1:], cb.pos[:j], ca.pos[i + 1:], ca.pos[:i]], axis=0)
        vel = np.concatenate([cb.vel[j + 1:], cb.vel[:j], ca.vel[i + 1:], ca.vel[:i]], axis=0)
        keep = [c for k, c in enumerate(model.curves) if k not in (ci, cj)]
        merged = Curve(pos, vel)
        if _substantial(merged, model.params):
            keep.append(merged)
        model.curves = keep


def resolve_collisions(model: SnakeModel, pairs) -> int:
    """Process collisions closest-first until none remain; returns event count.

    Each surgery removes two vertices, so the loop terminates; a hard bound
    guards against inconsistency anyway.
    """
    budget = model.n_vertices() // 2 + 4
    events = 0
    while pairs:
        if events >= budget:
            raise TopologyError(
                f"collision resolution did not settle after {events} events")
        _apply_surgery(model, pairs[0][0], pairs[0][1])
        events += 1
        pairs = detect_collisions(model)
    if events:
        resample(model)
        remaining = detect_collisions(model)
        while remaining and events < budget:
            _apply_surgery(model, remaining[0][0], remaining[0][1])
            events += 1
            remaining = detect_collisions(model)
    return events


# ---------------------------------------------------------------------------
# Evolution


@dataclass
class ConvergenceReport:
    iterations: int
    converged: bool
    wall_time: float
    n_curves: int
    n_vertices: int
    per_curve_vertices: list[int] = field(default_factory=list)
    min_edge_length: float = 0.0
    max_edge_length: float = 0.0

    def csv_row(self) -> str:
        counts = ";".join(str(c) for c in self.per_curve_vertices)
        return (f"{self.iterations},{int(self.converged)},{self.wall_time:.3f},"
                f"{self.n_curves},{self.n_vertices},{counts},"
                f"{self.min_edge_length:.6g},{self.max_edge_length:.6g}")


CSV_REPORT_HEADER = ("iterations,converged,wall_time_s,n_curves,n_vertices,"
                     "per_curve_vertices,min_edge_length,max_edge_length")


def evolve(model: SnakeModel, max_iters: int = 2000,
           snapshot_every: int = 0, snapshot_cb=None) -> ConvergenceReport:
    """Iterate forces + step until the largest displacement stays below tol
    for ``patience`` consecutive iterations, or until ``max_iters``."""
    t0 = time.perf_counter()
    streak = 0
    converged = False
    iterations = 0
    for it in range(max_iters):
        step(model)
        iterations = it + 1
        if snapshot_every and snapshot_cb and iterations % snapshot_every == 0:
            snapshot_cb(model, iterations)
        if model.d_max_last < model.params.tol and model.curves:
            streak += 1
            if streak >= model.params.patience:
                converged = True
                break
        else:
            streak = 0
        if not model.curves:
            break
    elapsed = time.perf_counter() - t0
    all_edges = np.concatenate([c.edge_euclidean_lengths() for c in model.curves]) \
        if model.curves else np.array([0.0])
    return ConvergenceReport(
        iterations=iterations,
        converged=converged,
        wall_time=elapsed,
        n_curves=len(model.curves),
        n_vertices=model.n_vertices(),
        per_curve_vertices=[len(c) for c in model.curves],
        min_edge_length=float(all_edges.min()),
        max_edge_length=float(all_edges.max()),
    )
