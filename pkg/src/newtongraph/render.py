"""Basin images (PPM) and matplotlib figures of Newton graphs."""

from __future__ import annotations

import colorsys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .complex_poly import RationalMap, is_inf
from .dynamics import Options, basin_roots, basin_index_array
from .errors import InvalidSpecError

UNDECIDED_RGB = (0, 0, 0)
ESCAPE_RGB = (128, 128, 128)
OVERLAY_RGB = (255, 255, 255)
BAND_ROWS = 64


def default_palette(n: int) -> list:
    out = []
    for i in range(n):
        r, g, b = colorsys.hsv_to_rgb(i / max(n, 1), 0.65, 0.9)
        out.append((int(r * 255), int(g * 255), int(b * 255)))
    return out


@dataclass(frozen=True)
class RenderSpec:
    width: int = 512
    height: int = 512
    viewport: tuple = (-2.0, 2.0, -2.0, 2.0)  # xmin, xmax, ymin, ymax
    max_iter: int = 200
    palette: tuple = ()
    overlay: tuple = field(default=(), repr=False)  # polylines

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise InvalidSpecError(f"image size must be positive, got {self.width}x{self.height}")
        x0, x1, y0, y1 = self.viewport
        if not (x1 > x0 and y1 > y0):
            raise InvalidSpecError(f"degenerate viewport {self.viewport}")
        if self.max_iter < 1:
            raise InvalidSpecError("max_iter must be >= 1")

    def pixel_grid(self, rows=None) -> np.ndarray:
        x0, x1, y0, y1 = self.viewport
        cols = np.arange(self.width)
        rows = np.arange(self.height) if rows is None else rows
        xs = x0 + (cols + 0.5) * (x1 - x0) / self.width
        ys = y1 - (rows + 0.5) * (y1 - y0) / self.height
        return xs[None, :] + 1j * ys[:, None]

    def to_pixel(self, z: complex) -> tuple:
        x0, x1, y0, y1 = self.viewport
        col = (z.real - x0) / (x1 - x0) * self.width - 0.5
        row = (y1 - z.imag) / (y1 - y0) * self.height - 0.5
        return col, row


def basin_labels(f: RationalMap, spec: RenderSpec, opts: Options) -> np.ndarray:
    """Root index per pixel (-1 escape, -2 undecided), computed in row bands."""
    roots = basin_roots(f)
    opts = Options(opts.eps_fix, opts.escape_radius, spec.max_iter)
    labels = np.empty((spec.height, spec.width), dtype=np.int64)
    for start in range(0, spec.height, BAND_ROWS):
        rows = np.arange(start, min(start + BAND_ROWS, spec.height))
        lab, _ = basin_index_array(f, spec.pixel_grid(rows), opts, roots)
        labels[rows] = lab
    return labels


def _rasterize(img: np.ndarray, spec: RenderSpec, poly, rgb) -> None:
    h, w = img.shape[:2]
    pts = [z for z in poly if not is_inf(z)]
    for a, b in zip(pts, pts[1:]):
        ca, ra = spec.to_pixel(a)
        cb, rb = spec.to_pixel(b)
        if max(ca, cb) < -1 or min(ca, cb) > w or max(ra, rb) < -1 or min(ra, rb) > h:
            continue
        steps = int(np.ceil(max(abs(cb - ca), abs(rb - ra)))) + 1
        steps = min(steps, 4 * (w + h))
        t = np.linspace(0.0, 1.0, steps + 1)
        cc = np.rint(ca + (cb - ca) * t).astype(int)
        rr = np.rint(ra + (rb - ra) * t).astype(int)
        ok = (cc >= 0) & (cc < w) & (rr >= 0) & (rr < h)
        img[rr[ok], cc[ok]] = rgb


def render_basins(f: RationalMap, spec: RenderSpec, opts: Options) -> np.ndarray:
    labels = basin_labels(f, spec, opts)
    n = len(basin_roots(f))
    palette = list(spec.palette) or default_palette(n)
    lut = np.array(palette + [ESCAPE_RGB, UNDECIDED_RGB], dtype=np.uint8)
    idx = np.where(labels >= 0, labels, np.where(labels == -1, n, n + 1))
    img = lut[idx]
    for poly in spec.overlay:
        _rasterize(img, spec, poly, OVERLAY_RGB)
    return img


def ppm_bytes(img: np.ndarray) -> bytes:
    h, w = img.shape[:2]
    return f"P6\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(img, dtype=np.uint8).tobytes()


def write_ppm(path, img: np.ndarray) -> None:
    Path(path).write_bytes(ppm_bytes(img))


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P6":
        raise InvalidSpecError("not a binary PPM")
    w, h = int(parts[1]), int(parts[2])
    return np.frombuffer(parts[4][: w * h * 3], dtype=np.uint8).reshape(h, w, 3)


def plot_graph(ax, g, viewport=None, color="k") -> None:
    for eid in sorted(g.edges):
        pts = np.array([z for z in g.geometry.get(eid, ()) if not is_inf(z)])
        if pts.size:
            ax.plot(pts.real, pts.imag, color=color, lw=0.8)
    for v in g.vertices.values():
        if v.position is not None and not is_inf(v.position):
            marker = {"root": "o", "pole": "x", "prepole": "+"}.get(v.kind, ".")
            ax.plot(v.position.real, v.position.imag, marker, color=color, ms=4)
    if viewport:
        ax.set_xlim(viewport[0], viewport[1])
        ax.set_ylim(viewport[2], viewport[3])
    ax.set_aspect("equal")


def save_figure(path, f: RationalMap, spec: RenderSpec, opts: Options, graph=None, title: str = "") -> None:
    """Basins with an optional graph on top, written with the Agg backend."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    img = render_basins(f, RenderSpec(spec.width, spec.height, spec.viewport, spec.max_iter, spec.palette), opts)
    fig, ax = plt.subplots(figsize=(6, 6))
    x0, x1, y0, y1 = spec.viewport
    ax.imshow(img, extent=(x0, x1, y0, y1), origin="upper", interpolation="nearest")
    if graph is not None:
        plot_graph(ax, graph, spec.viewport, color="white")
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)
