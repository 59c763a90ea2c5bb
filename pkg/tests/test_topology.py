import numpy as np
import pytest
from scipy import ndimage

from riemsnake.experiments import (
    DEFAULT_CONFIG,
    make_vessel_tree,
    run_topology,
    segment_image,
)
from riemsnake.imageops import gen_disk


@pytest.fixture(scope="module")
def topology_results(tmp_path_factory):
    out = tmp_path_factory.mktemp("topology")
    results = run_topology(out, dict(DEFAULT_CONFIG))
    return out, {r["scene"]: r for r in results}


class TestScenes:
    def test_single_disk_one_curve(self):
        img = gen_disk(160, (80, 80), 35)
        model, report = segment_image(img, dict(DEFAULT_CONFIG))
        assert len(model.curves) == 1
        assert report.converged

    def test_split_two_curves(self, topology_results):
        _, res = topology_results
        assert res["split"]["n_curves"] == 2 == res["split"]["expected"]

    def test_merge_one_curve(self, topology_results):
        _, res = topology_results
        assert res["merge"]["n_curves"] == 1 == res["merge"]["expected"]

    def test_annulus_two_curves(self, topology_results):
        _, res = topology_results
        assert res["annulus"]["n_curves"] == 2 == res["annulus"]["expected"]

    def test_vessels_match_component_count(self, topology_results):
        _, res = topology_results
        assert res["vessels"]["n_curves"] == res["vessels"]["expected"]

    def test_artifacts_written(self, topology_results):
        out, res = topology_results
        for scene in res:
            assert (out / f"{scene}.svg").exists()
        text = (out / "topology.csv").read_text()
        assert text.startswith("scene,")
        assert len(text.strip().splitlines()) == len(res) + 1


class TestVesselGenerator:
    def test_deterministic(self):
        a = make_vessel_tree(120, 4, seed=9)
        b = make_vessel_tree(120, 4, seed=9)
        np.testing.assert_array_equal(a, b)

    def test_has_components(self):
        img = make_vessel_tree(200, 5, seed=0)
        _, count = ndimage.label(img > 64.0)
        assert count >= 1
        assert img.max() > 128.0 and img.min() == 0.0


class TestOrientation:
    def test_annulus_orientations(self, tmp_path):
        # Outer boundary positively oriented, hole negatively: the signed
        # areas of a converged annulus must carry opposite signs.
        from riemsnake.experiments import build_pipeline
        from riemsnake.snake import evolve, init_circle

        ring = gen_disk(200, (100, 100), 45) - gen_disk(200, (100, 100), 25)
        cfg = dict(DEFAULT_CONFIG)
        cfg.update({"tau": 12.0, "rho": 5.0, "l_max": 12.5})
        _, metric, ctx, params = build_pipeline(ring, cfg)
        model = init_circle((100, 100), 80, metric, params, ctx)
        hole = init_circle((100, 100), 18, metric, params, ctx, orientation=-1)
        model.curves += hole.curves
        evolve(model, max_iters=int(cfg["max_iters"]))
        areas = sorted(c.signed_area() for c in model.curves)
        assert len(areas) == 2
        assert areas[0] == pytest.approx(-np.pi * 25 ** 2, rel=0.05)
        assert areas[1] == pytest.approx(np.pi * 45 ** 2, rel=0.05)
