import time

import numpy as np

from riemsnake.quadtree import Quadtree


def brute_force_range(points, center, radius):
    d = np.hypot(points[:, 0] - center[0], points[:, 1] - center[1])
    return set(np.flatnonzero(d <= radius).tolist())


class TestQuadtree:
    def test_empty(self):
        t = Quadtree(np.zeros((0, 2)))
        assert t.query_circle((0, 0), 10) == []

    def test_single_point(self):
        t = Quadtree(np.array([[3.0, 4.0]]))
        assert t.query_circle((0, 0), 5.0) == [0]
        assert t.query_circle((0, 0), 4.9) == []

    def test_matches_brute_force_randomized(self):
        rng = np.random.default_rng(0)
        for trial in range(30):
            n = int(rng.integers(5, 400))
            pts = rng.uniform(0, 100, size=(n, 2))
            t = Quadtree(pts)
            for _ in range(5):
                c = rng.uniform(0, 100, size=2)
                r = float(rng.uniform(0.5, 30))
                assert set(t.query_circle(c, r)) == brute_force_range(pts, c, r)

    def test_duplicate_points(self):
        pts = np.zeros((40, 2))  # duplicates deeper than MAX_DEPTH would allow
        t = Quadtree(pts)
        assert sorted(t.query_circle((0, 0), 0.1)) == list(range(40))

    def test_subquadratic_scaling(self):
        rng = np.random.default_rng(1)
        timings = {}
        for n in (4000, 8000):
            pts = rng.uniform(0, 1000, size=(n, 2))
            tree = Quadtree(pts)
            queries = rng.uniform(0, 1000, size=(200, 2))
            best = np.inf
            for _ in range(3):
                t0 = time.perf_counter()
                for q in queries:
                    tree.query_circle(q, 5.0)
                best = min(best, time.perf_counter() - t0)
            timings[n] = best
        # All-queries time should scale well below quadratically.
        assert timings[8000] <= 3.0 * timings[4000] + 1e-4
