import xml.etree.ElementTree as ET

import numpy as np
import pytest
from PIL import Image

from wembed.viz import (
    DensityGrid,
    align_grids,
    kde,
    level_set_overlay,
    render_words,
    scott_bandwidth,
    svg_path_area,
)
from wembed.word2cloud import Vocabulary, WordModel

SVG = "{http://www.w3.org/2000/svg}"


def toy_model():
    rng = np.random.default_rng(0)
    words = ["cat", "dog", "one", "two"]
    centers = np.array([[0, 0], [0.5, 0], [4, 4], [4.5, 4]], dtype=float)
    clouds = centers[:, None, :] + 0.3 * rng.normal(size=(4, 8, 2))
    E = clouds.reshape(4, -1)
    return WordModel(Vocabulary(words), E, np.eye(16), 8, 2)


class TestKDE:
    def test_single_point_peak(self):
        g = kde(np.zeros((1, 2)), bandwidth=0.5, resolution=65)
        iy, ix = np.unravel_index(np.argmax(g.values), g.values.shape)
        xs, ys = g.axes
        assert abs(xs[ix]) <= xs[1] - xs[0] and abs(ys[iy]) <= ys[1] - ys[0]

    def test_mass(self, rng):
        g = kde(rng.normal(size=(16, 2)), resolution=256)
        assert 0.98 <= g.mass() <= 1.02

    def test_symmetry(self):
        pts = np.array([[-1.0, 0.3], [1.0, 0.3], [-0.4, -1.0], [0.4, -1.0]])
        g = kde(pts, bandwidth=0.4, resolution=101, extent=(-3, 3, -3, 3))
        np.testing.assert_allclose(g.values, g.values[:, ::-1], atol=1e-12)

    def test_permutation_invariant(self, rng):
        pts = rng.normal(size=(10, 2))
        a = kde(pts, resolution=64)
        b = kde(pts[rng.permutation(10)], resolution=64)
        np.testing.assert_allclose(a.values, b.values, rtol=1e-12)

    def test_matches_direct_sum(self, rng):
        pts = rng.normal(size=(5, 2))
        h = 0.7
        g = kde(pts, bandwidth=h, resolution=9)
        xs, ys = g.axes
        X, Y = np.meshgrid(xs, ys)
        ref = sum(np.exp(-((X - x) ** 2 + (Y - y) ** 2) / (2 * h * h)) for x, y in pts) / (2 * np.pi * h * h * 5)
        np.testing.assert_allclose(g.values, ref, rtol=1e-12)

    def test_scott(self):
        pts = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [2.0, 2.0]])
        sigma = np.std([0, 2, 0, 2], ddof=1)
        assert scott_bandwidth(pts) == pytest.approx(4 ** (-1 / 6) * sigma)

    def test_rejects_3d(self):
        with pytest.raises(ValueError, match="project"):
            kde(np.zeros((3, 3)))

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            kde(np.array([[np.nan, 0.0]]))


class TestOverlay:
    def test_threshold_near_one_paints_peak_only(self):
        g = kde(np.zeros((1, 2)), bandwidth=1.0, resolution=101)
        mask = level_set_overlay([g], threshold=0.999).painted_masks()[0]
        assert 0 < mask.sum() <= 9 and mask[50, 50]

    def test_identical_grids_overlap(self, rng):
        g = kde(rng.normal(size=(6, 2)), resolution=64)
        a, b = level_set_overlay([g, g], colors=["#ff0000", "#0000ff"]).painted_masks()
        assert np.array_equal(a, b)

    def test_far_clouds_disjoint(self):
        g1 = kde(np.zeros((3, 2)) + [[0, 0]], bandwidth=0.3, resolution=128, extent=(-3, 23, -3, 3))
        g2 = kde(np.zeros((3, 2)) + [[20, 0]], bandwidth=0.3, resolution=128, extent=(-3, 23, -3, 3))
        a, b = level_set_overlay([g1, g2]).painted_masks()
        assert a.any() and b.any() and not (a & b).any()

    def test_band_opacity_composites_to_level(self):
        g = kde(np.zeros((1, 2)), bandwidth=1.0, resolution=64)
        layer = level_set_overlay([g], threshold=0.1, bands=4).layers[0]
        levels = [lv for lv, _, _ in layer]
        transparency = np.cumprod([1 - a for _, a, _ in layer])
        np.testing.assert_allclose(1 - transparency, levels, rtol=1e-12)

    def test_empty(self):
        with pytest.raises(ValueError):
            level_set_overlay([])

    def test_alignment_resamples(self):
        g1 = kde(np.zeros((1, 2)), bandwidth=0.5, resolution=32)
        g2 = kde(np.ones((1, 2)), bandwidth=0.5, resolution=48)
        a, b = align_grids([g1, g2])
        assert a.extent == b.extent and a.resolution == b.resolution == 48

    def test_monotone_regions(self, rng):
        g = kde(rng.normal(size=(8, 2)), resolution=128)
        areas = []
        for t in (0.05, 0.2, 0.5, 0.8):
            d = " ".join(p for p in level_set_overlay([g], threshold=t, bands=1).layers[0][0][2])
            areas.append(svg_path_area(d))
        assert all(x >= y for x, y in zip(areas, areas[1:]))


class TestRenderWords:
    def test_svg_parses(self, tmp_path):
        out = tmp_path / "w.svg"
        render_words(toy_model(), ["cat", "dog", "one"], out)
        root = ET.parse(out).getroot()
        groups = root.findall(f"{SVG}g")
        assert len([g for g in groups if g.get("id", "").startswith("density")]) == 3
        assert all(p.get("d") for p in root.iter(f"{SVG}path"))
        assert root.find(f"{SVG}g[@id='legend']") is not None

    def test_single_group_single_colour(self, tmp_path):
        out = tmp_path / "g.svg"
        render_words(toy_model(), None, out, groups={"all": ["cat", "dog", "one", "two"]})
        fills = {g.get("fill") for g in ET.parse(out).getroot().findall(f"{SVG}g") if g.get("id", "").startswith("density")}
        assert len(fills) == 1

    def test_png(self, tmp_path):
        out = tmp_path / "w.png"
        render_words(toy_model(), ["cat", "one"], out, resolution=64)
        img = Image.open(out)
        assert img.size == (64, 64) and img.mode == "RGB"

    def test_deterministic_bytes(self, tmp_path):
        render_words(toy_model(), ["cat", "two"], tmp_path / "a.svg")
        render_words(toy_model(), ["cat", "two"], tmp_path / "b.svg")
        assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()

    def test_empty_and_oov(self, tmp_path):
        with pytest.raises(ValueError):
            render_words(toy_model(), [], tmp_path / "x.svg")
        with pytest.raises(ValueError, match="zebra"):
            render_words(toy_model(), ["cat", "zebra"], tmp_path / "x.svg")
