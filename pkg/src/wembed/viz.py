"""Density views of 2-D point-cloud embeddings.

Each cloud is smoothed with an isotropic Gaussian KDE on a regular grid; the
upper level set ``{density >= threshold * max}`` is drawn filled in the
cloud's colour, with opacity growing with density.  SVG output uses
marching-squares contours; PNG output composites the grids directly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from skimage import measure

from .ot import as_cloud

DEFAULT_THRESHOLD = 0.05
DEFAULT_RESOLUTION = 256
PAD_BANDWIDTHS = 4.0
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f"]


@dataclass
class DensityGrid:
    values: np.ndarray  # (R, R), row index = y, column index = x
    extent: tuple  # (xmin, xmax, ymin, ymax) of the cell-centre lattice
    bandwidth: float

    @property
    def resolution(self):
        return self.values.shape[0]

    @property
    def axes(self):
        xmin, xmax, ymin, ymax = self.extent
        R = self.resolution
        return np.linspace(xmin, xmax, R), np.linspace(ymin, ymax, R)

    @property
    def cell_area(self):
        xs, ys = self.axes
        return (xs[1] - xs[0]) * (ys[1] - ys[0])

    def mass(self):
        return float(self.values.sum() * self.cell_area)


def scott_bandwidth(points):
    pts = as_cloud(points)
    M = pts.shape[0]
    sigma = pts.std(axis=0, ddof=1).mean() if M > 1 else 0.0
    if not sigma > 0:
        return 0.1
    return float(M ** (-1.0 / 6.0) * sigma)


def padded_extent(clouds, bandwidth):
    pts = np.concatenate([as_cloud(c) for c in clouds])
    lo = pts.min(axis=0) - PAD_BANDWIDTHS * bandwidth
    hi = pts.max(axis=0) + PAD_BANDWIDTHS * bandwidth
    return (float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1]))


def kde(cloud, bandwidth=None, resolution=DEFAULT_RESOLUTION, extent=None):
    pts = as_cloud(cloud)
    if pts.shape[1] != 2:
        raise ValueError(
            f"only 2-D ground spaces can be rendered (got k={pts.shape[1]}); "
            "slice or project the clouds to two coordinates first"
        )
    h = scott_bandwidth(pts) if bandwidth in (None, "auto") else float(bandwidth)
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    if extent is None:
        extent = padded_extent([pts], h)
    xmin, xmax, ymin, ymax = extent
    xs = np.linspace(xmin, xmax, resolution)
    ys = np.linspace(ymin, ymax, resolution)
    # separable Gaussian: density = sum_m gx[m, x] * gy[m, y] / M
    norm = 1.0 / (2.0 * np.pi * h * h * pts.shape[0])
    gx = np.exp(-0.5 * ((xs[None, :] - pts[:, :1]) / h) ** 2)
    gy = np.exp(-0.5 * ((ys[None, :] - pts[:, 1:]) / h) ** 2)
    values = norm * gy.T @ gx
    return DensityGrid(values, tuple(float(e) for e in extent), h)


def _resample(grid, extent, resolution):
    if grid.extent == tuple(extent) and grid.resolution == resolution:
        return grid
    xs, ys = grid.axes
    interp = RegularGridInterpolator((ys, xs), grid.values, bounds_error=False, fill_value=0.0)
    nx = np.linspace(extent[0], extent[1], resolution)
    ny = np.linspace(extent[2], extent[3], resolution)
    YY, XX = np.meshgrid(ny, nx, indexing="ij")
    vals = interp(np.stack([YY.ravel(), XX.ravel()], axis=1)).reshape(resolution, resolution)
    return DensityGrid(np.maximum(vals, 0.0), tuple(extent), grid.bandwidth)


def align_grids(grids):
    if not grids:
        raise ValueError("no density grids given")
    first = grids[0]
    if all(g.extent == first.extent and g.resolution == first.resolution for g in grids):
        return list(grids)
    ext = np.array([g.extent for g in grids])
    union = (ext[:, 0].min(), ext[:, 1].max(), ext[:, 2].min(), ext[:, 3].max())
    R = max(g.resolution for g in grids)
    return [_resample(g, union, R) for g in grids]


def _band_levels(threshold, bands):
    # opacity after compositing all bands up to level l equals l
    levels = np.linspace(threshold, 1.0, bands + 1)[:-1]
    alphas = np.empty(bands)
    prev = 0.0
    for b, lev in enumerate(levels):
        alphas[b] = 1.0 - (1.0 - lev) / (1.0 - prev)
        prev = lev
    return levels, alphas


def _contour_paths(norm, level, to_svg):
    padded = np.pad(norm, 1, constant_values=0.0)
    paths = []
    for c in measure.find_contours(padded, level, positive_orientation="high"):
        pts = to_svg(c - 1.0)
        if len(pts) < 3:
            continue
        d = "M " + " L ".join(f"{x:.2f} {y:.2f}" for x, y in pts) + " Z"
        paths.append(d)
    return paths


@dataclass
class Overlay:
    """Composed level-set layers; ``layers[g]`` lists ``(level, alpha, paths)``."""

    grids: list
    colors: list
    threshold: float
    layers: list
    size: int

    def to_svg(self, legend=None):
        extent = self.grids[0].extent
        width = self.size + (160 if legend else 0)
        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{self.size}" '
            f'viewBox="0 0 {width} {self.size}">',
            f"<!-- extent {extent[0]:.6g} {extent[1]:.6g} {extent[2]:.6g} {extent[3]:.6g} -->",
            f'<rect x="0" y="0" width="{self.size}" height="{self.size}" fill="white"/>',
        ]
        for g, (color, layer) in enumerate(zip(self.colors, self.layers)):
            out.append(f'<g id="density-{g}" fill="{color}" stroke="none" fill-rule="evenodd">')
            for b, (level, alpha, paths) in enumerate(layer):
                if not paths:
                    continue
                out.append(
                    f'<path class="band-{b}" data-level="{level:.4f}" fill-opacity="{alpha:.4f}" d="{" ".join(paths)}"/>'
                )
            out.append("</g>")
        if legend:
            out.append('<g id="legend" font-family="sans-serif" font-size="14">')
            for i, (name, color) in enumerate(legend):
                y = 20 + 22 * i
                out.append(f'<rect x="{self.size + 12}" y="{y - 12}" width="14" height="14" fill="{color}"/>')
                out.append(f'<text x="{self.size + 32}" y="{y}">{_escape(name)}</text>')
            out.append("</g>")
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def raster(self):
        """RGBA float image composited over white, shape ``(R, R, 4)``."""
        R = self.grids[0].resolution
        rgb = np.ones((R, R, 3))
        for grid, color in zip(self.grids, self.colors):
            norm = grid.values / grid.values.max()
            alpha = np.where(norm >= self.threshold, norm, 0.0)[..., None]
            rgb = (1.0 - alpha) * rgb + alpha * np.array(_hex_rgb(color))
        img = np.concatenate([rgb, np.ones((R, R, 1))], axis=2)
        return img[::-1]  # first row at the top

    def painted_masks(self):
        return [g.values >= self.threshold * g.values.max() for g in self.grids]


def _escape(s):
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _hex_rgb(color):
    c = color.lstrip("#")
    return tuple(int(c[i : i + 2], 16) / 255.0 for i in (0, 2, 4))


def level_set_overlay(grids, threshold=DEFAULT_THRESHOLD, colors=None, bands=5, size=512):
    if not grids:
        raise ValueError("level_set_overlay needs at least one density grid")
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    grids = align_grids(grids)
    colors = list(colors) if colors is not None else [PALETTE[i % len(PALETTE)] for i in range(len(grids))]
    if len(colors) != len(grids):
        raise ValueError("need one colour per grid")
    R = grids[0].resolution
    scale = size / (R - 1)

    def to_svg(c):
        # contour rows are y (up), columns are x; SVG y points down
        return np.stack([c[:, 1] * scale, (R - 1 - c[:, 0]) * scale], axis=1)

    levels, alphas = _band_levels(threshold, bands)
    layers = []
    for g in grids:
        norm = g.values / g.values.max()
        layers.append([(float(l), float(a), _contour_paths(norm, l, to_svg)) for l, a in zip(levels, alphas)])
    return Overlay(grids, colors, threshold, layers, size)


def svg_path_area(d):
    """Absolute area enclosed by an SVG path of ``M ... L ... Z`` subpaths (even-odd)."""
    total = 0.0
    for sub in d.split("M")[1:]:
        nums = np.array(sub.replace("L", " ").replace("Z", " ").split(), dtype=float).reshape(-1, 2)
        x, y = nums[:, 0], nums[:, 1]
        total += 0.5 * (np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
    return abs(total)


def render_words(model, words, out_path, groups=None, colors=None, threshold=DEFAULT_THRESHOLD,
                 bandwidth=None, resolution=DEFAULT_RESOLUTION, fmt=None, size=512):
    """Overlay the level sets of several words' clouds and write SVG or PNG.

    ``groups`` maps a group name to its words; all words in a group share one
    colour and one legend entry.
    """
    from .word2cloud import _clouds_and_labels, _lookup

    if groups:
        names = list(groups)
        words = [w for n in names for w in groups[n]]
        palette = list(colors) if colors else [PALETTE[i % len(PALETTE)] for i in range(len(names))]
        word_colors = [palette[i] for i, n in enumerate(names) for _ in groups[n]]
        legend = list(zip(names, palette))
    else:
        words = list(words)
        word_colors = list(colors) if colors else [PALETTE[i % len(PALETTE)] for i in range(len(words))]
        legend = list(zip(words, word_colors))
    if not words:
        raise ValueError("no words to render")
    clouds, labels = _clouds_and_labels(model)
    missing = [w for w in words if w not in labels]
    if missing:
        raise ValueError("words not in vocabulary: " + ", ".join(missing))
    pts = [clouds[_lookup(labels, w)] for w in words]
    if pts[0].shape[1] != 2:
        raise ValueError(f"clouds live in R^{pts[0].shape[1]}; only R^2 clouds can be rendered")
    hs = [scott_bandwidth(p) if bandwidth in (None, "auto") else float(bandwidth) for p in pts]
    extent = padded_extent(pts, max(hs))
    grids = [kde(p, h, resolution, extent) for p, h in zip(pts, hs)]
    overlay = level_set_overlay(grids, threshold, word_colors, size=size)
    fmt = fmt or ("png" if str(out_path).lower().endswith(".png") else "svg")
    if fmt == "svg":
        with open(out_path, "w") as fh:
            fh.write(overlay.to_svg(legend))
    elif fmt == "png":
        from PIL import Image

        img = (overlay.raster()[..., :3] * 255).round().astype(np.uint8)
        Image.fromarray(img).save(out_path, format="PNG")
    else:
        raise ValueError(f"unknown image format {fmt!r}")
    return overlay
