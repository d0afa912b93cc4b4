"""Minimal deterministic SVG figures (no plotting library)."""

from __future__ import annotations

import math

import numpy as np

PALETTE = ("#d62728", "#1f5fd6", "#2ca02c")
CUSP_FILL = "#8c8c8c"


def color_for(k):
    return PALETTE[k % len(PALETTE)]


def _f(v):
    return f"{v:.6f}".rstrip("0").rstrip(".") if v == v else "0"


class Figure:
    """World-coordinate canvas; y points up."""

    def __init__(self, xmin, xmax, ymin, ymax, width=640, margin=0.05):
        dx, dy = xmax - xmin, ymax - ymin
        pad = margin * max(dx, dy)
        self.xmin, self.xmax = xmin - pad, xmax + pad
        self.ymin, self.ymax = ymin - pad, ymax + pad
        self.width = width
        self.height = int(round(width * (self.ymax - self.ymin) / (self.xmax - self.xmin)))
        self.unit = (self.xmax - self.xmin) / width
        self.items = []

    @classmethod
    def around(cls, x, y, **kw):
        x, y = np.asarray(x), np.asarray(y)
        return cls(float(x.min()), float(x.max()), float(y.min()), float(y.max()), **kw)

    def inside(self, x, y, factor=1.0):
        cx, cy = 0.5 * (self.xmin + self.xmax), 0.5 * (self.ymin + self.ymax)
        hx, hy = 0.5 * factor * (self.xmax - self.xmin), 0.5 * factor * (self.ymax - self.ymin)
        return (np.abs(np.asarray(x) - cx) <= hx) & (np.abs(np.asarray(y) - cy) <= hy)

    def polyline(self, x, y, stroke="black", width=1.0, closed=False, opacity=1.0, clip=2.0):
        """Draw a polyline, breaking it wherever it leaves ``clip`` times the view."""
        x, y = np.asarray(x, float), np.asarray(y, float)
        keep = np.isfinite(x) & np.isfinite(y) & self.inside(x, y, clip)
        runs, cur = [], []
        for k in range(x.size):
            if keep[k]:
                cur.append(k)
            elif cur:
                runs.append(cur)
                cur = []
        if cur:
            runs.append(cur)
        if closed and len(runs) == 1 and len(runs[0]) == x.size:
            runs[0].append(0)
        for r in runs:
            if len(r) < 2:
                continue
            pts = " ".join(f"{_f(x[k])},{_f(y[k])}" for k in r)
            self.items.append(
                f'<polyline points="{pts}" fill="none" stroke="{stroke}" '
                f'stroke-width="{_f(width * self.unit)}" stroke-opacity="{_f(opacity)}"/>'
            )

    def segment(self, x0, y0, x1, y1, stroke="#b0b0b0", width=0.5):
        self.items.append(
            f'<line x1="{_f(x0)}" y1="{_f(y0)}" x2="{_f(x1)}" y2="{_f(y1)}" '
            f'stroke="{stroke}" stroke-width="{_f(width * self.unit)}"/>'
        )

    def disk(self, x, y, r_px=3.0, fill="black", stroke="none"):
        if not (math.isfinite(x) and math.isfinite(y)):
            return
        self.items.append(
            f'<circle cx="{_f(x)}" cy="{_f(y)}" r="{_f(r_px * self.unit)}" fill="{fill}" stroke="{stroke}"/>'
        )

    def text(self, x, y, label, size_px=12):
        # text is drawn in an unflipped group so it reads upright
        self.items.append(
            f'<text x="{_f(x)}" y="{_f(-y)}" font-size="{_f(size_px * self.unit)}" '
            f'font-family="sans-serif" transform="scale(1,-1)">{label}</text>'
        )

    def render(self):
        vb = f"{_f(self.xmin)} {_f(-self.ymax)} {_f(self.xmax - self.xmin)} {_f(self.ymax - self.ymin)}"
        head = (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="{vb}">'
        )
        body = "\n".join(self.items)
        return f'{head}\n<rect x="{_f(self.xmin)}" y="{_f(-self.ymax)}" width="100%" height="100%" fill="white"/>\n' \
               f'<g transform="scale(1,-1)">\n{body}\n</g>\n</svg>\n'

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.render())


def table_figure(oval, n=720):
    """Figure framed on ``oval`` in table coordinates with the table and source drawn."""
    t = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    x, y = oval.evaluate(t)[:2]
    ox, oy = oval.origin
    fig = Figure.around(x + ox, y + oy, margin=0.25)
    fig.polyline(x + ox, y + oy, stroke="black", width=1.5, closed=True)
    fig.disk(ox, oy, 3.0, fill="black")
    return fig


def draw_rays(fig, oval, alpha, p, count=48):
    """Chords of ``count`` evenly subsampled lines, in table coordinates."""
    from .lines import OrientedLine, line_to_boundary
    from .errors import NumericalError

    ox, oy = oval.origin
    idx = np.unique(np.linspace(0, len(alpha) - 1, count).astype(int))
    for k in idx:
        try:
            hit = line_to_boundary(OrientedLine(float(alpha[k]), float(p[k])), oval)
        except NumericalError:
            continue
        (x0, y0), (x1, y1) = oval.point(np.array([hit.t_entry, hit.t_exit]))
        fig.segment(x0 + ox, y0 + oy, x1 + ox, y1 + oy)


def draw_caustic(fig, curve, origin, color):
    ox, oy = origin
    if curve.degenerate:
        fig.disk(curve.point[0] + ox, curve.point[1] + oy, 4.0, fill=color)
        return
    for arc in np.unique(curve.arc_id):
        m = curve.arc_id == arc
        fig.polyline(curve.x[m] + ox, curve.y[m] + oy, stroke=color, width=1.2)
    for c in curve.cusps:
        fig.disk(c.x + ox, c.y + oy, 4.0, fill=CUSP_FILL, stroke="black")


def draw_front(fig, front, origin, color, vertices=()):
    ox, oy = origin
    fig.polyline(front.x + ox, front.y + oy, stroke=color, width=1.0, closed=True)
    for s in vertices:
        k = int(np.argmin(np.abs(np.mod(front.s - s + math.pi, 2 * math.pi) - math.pi)))
        fig.disk(front.x[k] + ox, front.y[k] + oy, 2.5, fill="white", stroke=color)


def filmstrip(path, snapshots, columns=5, panel=160):
    """Grid of ``p(alpha)`` charts, one panel per snapshot, sharing a p-scale."""
    snaps = list(snapshots)
    pmax = max([float(np.max(np.abs(s.p))) for s in snaps] + [1e-12])
    rows = max(1, math.ceil(len(snaps) / columns))
    w, h = columns * panel, rows * panel
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
           f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>']
    for k, st in enumerate(snaps):
        x0, y0 = (k % columns) * panel, (k // columns) * panel
        a = np.append(st.alpha, st.alpha[0] + 2 * math.pi) - st.alpha[0]
        q = np.append(st.p, st.p[0])
        px = x0 + 8 + (panel - 16) * a / (2 * math.pi)
        py = y0 + panel / 2 - (panel / 2 - 14) * q / pmax
        pts = " ".join(f"{_f(u)},{_f(v)}" for u, v in zip(px, py))
        out.append(f'<rect x="{x0 + 4}" y="{y0 + 4}" width="{panel - 8}" height="{panel - 8}" '
                   f'fill="none" stroke="#cccccc"/>')
        out.append(f'<line x1="{x0 + 8}" y1="{y0 + panel / 2}" x2="{x0 + panel - 8}" '
                   f'y2="{y0 + panel / 2}" stroke="#dddddd"/>')
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color_for(k)}" stroke-width="1"/>')
        out.append(f'<text x="{x0 + 8}" y="{y0 + 16}" font-size="10" font-family="sans-serif">'
                   f't={st.time:.4g}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
