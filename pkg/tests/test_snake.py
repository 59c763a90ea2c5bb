import numpy as np
import pytest

from riemsnake.imageops import gen_disk
from riemsnake.metric import MetricField, identity_metric
from riemsnake.snake import (
    Curve,
    ImageForceContext,
    ModelParams,
    SnakeModel,
    _apply_surgery,
    compute_forces,
    detect_collisions,
    evolve,
    init_circle,
    init_rect,
    resample,
    step,
)
from riemsnake.tensorfeat import EstimatorParams, compute_features


def scaled_metric(shape, c):
    """Conformal metric G = c^2 I, so Riemannian length = c * Euclidean."""
    one = np.full(shape, float(c) ** 2)
    zero = np.zeros(shape)
    return MetricField(one, zero, one.copy(), one.copy(), one.copy(),
                       np.ones(shape), zero.copy())


def square_model(side=10.0, delta=8.0, **overrides):
    """4-vertex square whose edges sit inside the band; no image forces."""
    params = ModelParams(delta=delta, zeta=2.5, **overrides)
    pos = np.array([[40.0, 40.0], [40.0 + side, 40.0],
                    [40.0 + side, 40.0 + side], [40.0, 40.0 + side]])
    return SnakeModel([Curve(pos)], identity_metric((100, 100)), params)


class TestInit:
    def test_circle_vertex_count_in_band(self):
        m = init_circle((50, 50), 30, identity_metric((100, 100)),
                        ModelParams(delta=4.0, zeta=2.5))
        n = m.n_vertices()
        # Perimeter / band bounds: ceil(2*pi*30 / 10) .. floor(2*pi*30 / 4).
        assert 19 <= n <= 48
        lengths = m.edge_riemannian_lengths(m.curves[0])
        assert np.all(lengths >= 4.0 - 1e-9)
        assert np.all(lengths <= 10.0 + 1e-9)

    def test_circle_positive_orientation(self):
        m = init_circle((50, 50), 20, identity_metric((100, 100)),
                        ModelParams(delta=4.0))
        assert m.curves[0].signed_area() > 0

    def test_circle_hole_orientation(self):
        m = init_circle((50, 50), 20, identity_metric((100, 100)),
                        ModelParams(delta=4.0), orientation=-1)
        assert m.curves[0].signed_area() < 0

    def test_circle_too_small(self):
        with pytest.raises(ValueError):
            init_circle((50, 50), 0.5, identity_metric((100, 100)),
                        ModelParams(delta=8.0))

    def test_circle_out_of_bounds(self):
        with pytest.raises(ValueError):
            init_circle((50, 50), 60, identity_metric((100, 100)),
                        ModelParams(delta=4.0))

    def test_rect(self):
        m = init_rect((10, 10, 80, 60), identity_metric((100, 100)),
                      ModelParams(delta=4.0))
        c = m.curves[0]
        assert c.signed_area() == pytest.approx(70 * 50, rel=1e-9)
        lengths = m.edge_riemannian_lengths(c)
        assert np.all(lengths <= 10.0 + 1e-9)

    def test_rect_degenerate(self):
        with pytest.raises(ValueError):
            init_rect((10, 10, 10, 60), identity_metric((100, 100)),
                      ModelParams(delta=4.0))


class TestResample:
    def test_fixpoint(self):
        m = init_circle((50, 50), 25, identity_metric((100, 100)),
                        ModelParams(delta=4.0))
        before = m.curves[0].pos.copy()
        assert resample(m)
        np.testing.assert_array_equal(m.curves[0].pos, before)

    def test_band_after_perturbation(self):
        rng = np.random.default_rng(0)
        m = init_circle((50, 50), 25, identity_metric((100, 100)),
                        ModelParams(delta=4.0))
        m.curves[0].pos += rng.uniform(-2, 2, size=m.curves[0].pos.shape)
        assert resample(m)
        lengths = m.edge_riemannian_lengths(m.curves[0])
        assert np.all(lengths >= 4.0 - 1e-9) and np.all(lengths <= 10.0 + 1e-9)

    def test_scaled_metric_halves_euclidean_spacing(self):
        p = ModelParams(delta=4.0, zeta=2.5)
        uniform = init_circle((50, 50), 25, identity_metric((100, 100)), p)
        dense = init_circle((50, 50), 25, scaled_metric((100, 100), 2.0), p)
        # Riemannian band is identical, so Euclidean edges shrink by ~2x.
        eu = uniform.curves[0].edge_euclidean_lengths().mean()
        ed = dense.curves[0].edge_euclidean_lengths().mean()
        assert ed == pytest.approx(eu / 2.0, rel=0.15)
        assert dense.n_vertices() == pytest.approx(2 * uniform.n_vertices(), rel=0.15)

    def test_long_edge_split(self):
        # Equilateral triangle with sides just over the upper bound.
        p = ModelParams(delta=4.0, zeta=2.5)
        s = 10.5
        pts = np.array([[30.0, 30.0], [30.0 + s, 30.0],
                        [30.0 + s / 2, 30.0 + s * np.sqrt(3) / 2]])
        m = SnakeModel([Curve(pts)], identity_metric((100, 100)), p)
        assert resample(m)
        assert m.n_vertices() == 6
        lengths = m.edge_riemannian_lengths(m.curves[0])
        assert np.all(lengths <= 10.0 + 1e-9)

    def test_degenerate_curve_dropped(self):
        p = ModelParams(delta=4.0, zeta=2.5)
        pts = np.array([[50.0, 50.0], [50.2, 50.0], [50.1, 50.2]])
        m = SnakeModel([Curve(pts)], identity_metric((100, 100)), p)
        resample(m)
        assert m.curves == []


class TestForces:
    def test_collinear_tension_zero(self):
        m = square_model(alpha=0.7)
        # Insert midpoint vertex on an edge: its neighbors' midpoint is itself.
        pos = np.array([[40.0, 40.0], [45.0, 40.0], [50.0, 40.0],
                        [50.0, 50.0], [40.0, 50.0]])
        m.curves = [Curve(pos)]
        f = compute_forces(m)[0]
        np.testing.assert_allclose(f[1], 0.0, atol=1e-12)

    def test_tension_pulls_inward_on_corner(self):
        m = square_model(alpha=1.0)
        f = compute_forces(m)[0]
        # Corner (40, 40): neighbor midpoint is (45, 45), force points there.
        assert f[0, 0] > 0 and f[0, 1] > 0

    def test_inflation_zero_on_constant_image(self):
        img = np.full((100, 100), 80.0)
        feats = compute_features(img, EstimatorParams(1.0, 2.0))
        ctx = ImageForceContext.build(img, feats, tau=5.0)
        m = square_model(alpha=0.0, chi=2.0)
        m.forces = ctx
        f = compute_forces(m)[0]
        np.testing.assert_allclose(f, 0.0, atol=1e-12)

    def test_inflation_outward_inside_bright_disk(self):
        img = gen_disk(100, (50, 50), 30)
        feats = compute_features(img, EstimatorParams(2.0, 5.0))
        ctx = ImageForceContext.build(img, feats, tau=10.0)
        p = ModelParams(delta=8.0, zeta=2.5, alpha=0.0, beta=0.0, chi=2.0)
        m = init_circle((50, 50), 26, identity_metric((100, 100)), p, ctx)
        f = compute_forces(m)[0]
        radial = m.curves[0].pos - [50, 50]
        radial /= np.linalg.norm(radial, axis=1, keepdims=True)
        # Just inside a bright disk the gray level exceeds its local mean.
        assert np.mean(np.sum(f * radial, axis=1) > 0) > 0.9

    def test_potential_normalized(self):
        img = gen_disk(100, (50, 50), 30)
        feats = compute_features(img, EstimatorParams(2.0, 5.0))
        ctx = ImageForceContext.build(img, feats, tau=10.0)
        assert ctx.potential.max() == pytest.approx(1.0)
        assert ctx.potential.min() >= 0.0


class TestIntegrator:
    def test_zero_force_no_motion(self):
        m = square_model(alpha=0.0)
        before = m.curves[0].pos.copy()
        step(m)
        np.testing.assert_array_equal(m.curves[0].pos, before)

    def test_displacement_dt_squared_over_mass(self):
        m = square_model(alpha=0.0, dt=0.5, mass=2.0, damping=0.0)
        before = m.curves[0].pos.copy()
        f = np.zeros((4, 2))
        f[0] = [1.0, 0.0]
        step(m, forces=[f])
        moved = m.curves[0].pos[0] - before[0]
        assert moved[0] == pytest.approx(0.5 ** 2 * 1.0 / 2.0)
        assert moved[1] == 0.0

    def test_displacement_cap(self):
        # delta chosen so the post-step edge lengths stay inside the band
        # and resampling leaves the vertex in place.
        m = square_model(alpha=0.0, dt=1.0, damping=0.0, delta=5.0)
        m.curves[0].vel[0] = [100.0, 0.0]
        before = m.curves[0].pos.copy()
        step(m)
        moved = np.linalg.norm(m.curves[0].pos[0] - before[0])
        assert moved == pytest.approx(m.params.d_cap)

    def test_positions_stay_in_image(self):
        m = square_model(alpha=0.0, dt=1.0, damping=0.0)
        m.curves[0].vel[:] = [[4.0, 0.0]] * 4
        # The ring slides into the wall, clamps there and eventually
        # degenerates and is dropped; until then it must stay in bounds.
        for _ in range(40):
            step(m)
            if not m.curves:
                break
            assert m.curves[0].pos[:, 0].max() <= 99.0

    def test_kinetic_energy_nonincreasing_under_damping(self):
        rng = np.random.default_rng(3)
        m = square_model(alpha=0.0, damping=0.6)
        m.curves[0].vel[:] = rng.normal(scale=0.5, size=(4, 2))
        prev = np.inf
        for _ in range(10):
            step(m)
            e = float(np.sum(m.curves[0].vel ** 2))
            assert e <= prev + 1e-12
            prev = e


class TestCollisions:
    @staticmethod
    def brute_force_pairs(model):
        from riemsnake.metric import riemannian_edge_length
        from riemsnake.snake import _ring_distance, collision_threshold
        thr = collision_threshold(model)
        out = set()
        idx = [(ci, vi) for ci, c in enumerate(model.curves)
               for vi in range(len(c))]
        for a in range(len(idx)):
            for b in range(a + 1, len(idx)):
                (ci, vi), (cj, vj) = idx[a], idx[b]
                if ci == cj and _ring_distance(vi, vj, len(model.curves[ci])) <= 2:
                    continue
                d = riemannian_edge_length(
                    model.metric, model.curves[ci].pos[vi], model.curves[cj].pos[vj])
                if d <= thr:
                    out.add((idx[a], idx[b]))
        return out

    def random_model(self, rng):
        params = ModelParams(delta=4.0, zeta=2.5)
        curves = []
        for _ in range(int(rng.integers(1, 5))):
            n = int(rng.integers(4, 40))
            c = rng.uniform(20, 80, size=2)
            r = float(rng.uniform(3, 18))
            ts = np.linspace(0, 2 * np.pi, n, endpoint=False)
            pts = np.stack([c[0] + r * np.cos(ts), c[1] + r * np.sin(ts)], axis=1)
            pts += rng.uniform(-1, 1, size=pts.shape)
            curves.append(Curve(np.clip(pts, 0, 99)))
        return SnakeModel(curves, identity_metric((100, 100)), params)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(1)
        for _ in range(25):
            m = self.random_model(rng)
            got = {(u, v) for u, v, _ in detect_collisions(m)}
            assert got == self.brute_force_pairs(m)

    def test_neighbors_never_collide(self):
        m = init_circle((50, 50), 3.5, identity_metric((100, 100)),
                        ModelParams(delta=4.0))
        # A tiny ring has every pair within the threshold, but all at ring
        # distance <= 2 when n <= 5.
        if m.n_vertices() <= 5:
            assert detect_collisions(m) == []

    def test_sorted_by_distance(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            pairs = detect_collisions(self.random_model(rng))
            dists = [d for _, _, d in pairs]
            assert dists == sorted(dists)


class TestSurgery:
    def ring(self, center, r, n):
        ts = np.linspace(0, 2 * np.pi, n, endpoint=False)
        return Curve(np.stack([center[0] + r * np.cos(ts),
                               center[1] + r * np.sin(ts)], axis=1))

    def model(self, curves, delta=2.0):
        return SnakeModel(curves, identity_metric((200, 200)),
                          ModelParams(delta=delta, zeta=2.5))

    def test_split_same_curve(self):
        m = self.model([self.ring((100, 100), 40, 12)])
        _apply_surgery(m, (0, 0), (0, 6))
        assert len(m.curves) == 2
        assert all(len(c) == 5 for c in m.curves)
        assert all(c.signed_area() > 0 for c in m.curves)
        assert m.n_vertices() == 10

    def test_merge_two_curves(self):
        a = self.ring((60, 100), 25, 10)
        b = self.ring((140, 100), 25, 10)
        m = self.model([a, b])
        _apply_surgery(m, (0, 0), (1, 5))
        assert len(m.curves) == 1
        assert len(m.curves[0]) == 18
        assert m.curves[0].signed_area() > 0

    def test_merge_area_roughly_additive(self):
        a = self.ring((60, 100), 25, 36)
        b = self.ring((140, 100), 25, 36)
        s0 = a.signed_area() + b.signed_area()
        m = self.model([a, b])
        _apply_surgery(m, (0, 0), (1, 18))
        # Two vertices vanish and a thin bridge appears; area stays close.
        assert m.curves[0].signed_area() == pytest.approx(s0, rel=0.1)

    def test_thin_sliver_culled(self):
        # Two nearly coincident antiparallel arcs form a sliver ring.
        xs = np.linspace(20, 80, 16)
        top = np.stack([xs, np.full_like(xs, 51.0)], axis=1)
        bot = np.stack([xs[::-1], np.full_like(xs, 50.0)], axis=1)
        sliver = Curve(np.concatenate([top, bot], axis=0))
        fat = self.ring((150, 150), 30, 24)
        m = self.model([sliver, fat], delta=4.0)
        _apply_surgery(m, (0, 0), (0, 16))
        # Both halves of the sliver are below model resolution and vanish.
        assert len(m.curves) == 1
        assert m.curves[0].signed_area() == pytest.approx(fat.signed_area())


class TestEvolve:
    def test_immediate_convergence_without_forces(self):
        m = square_model(alpha=0.0, tol=0.05, patience=3)
        rep = evolve(m, max_iters=50)
        assert rep.converged and rep.iterations == 3
        assert rep.n_curves == 1 and rep.n_vertices == len(m.curves[0])

    def test_report_edge_lengths(self):
        m = init_circle((50, 50), 25, identity_metric((100, 100)),
                        ModelParams(delta=4.0, alpha=0.0, tol=0.05))
        rep = evolve(m, max_iters=20)
        assert 4.0 - 1e-9 <= rep.min_edge_length
        assert rep.max_edge_length <= 10.0 + 1e-9
        row = rep.csv_row()
        assert str(rep.n_vertices) in row

    def test_snapshot_callback(self):
        m = square_model(alpha=0.0, tol=0.05, patience=3)
        seen = []
        evolve(m, max_iters=10, snapshot_every=1,
               snapshot_cb=lambda model, it: seen.append(it))
        assert seen == [1, 2, 3]
