"""Minimal SVG line plots: stacked panels, polylines, axes, ticks and a legend."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

DASHES = {"solid": None, "dashed": "6,4", "dotted": "1.5,3"}
MAX_POINTS = 4000


@dataclass
class Series:
    t: np.ndarray
    y: np.ndarray
    label: str
    style: str = "solid"
    color: str = "#1f4e9c"


@dataclass
class Panel:
    title: str
    series: List[Series] = field(default_factory=list)
    xlim: Optional[Sequence[float]] = None
    xlabel: str = "t"

    def add(self, t, y, label, style="solid", color="#1f4e9c") -> "Panel":
        self.series.append(Series(np.asarray(t, float), np.asarray(y, float), label, style, color))
        return self


def _nice_ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    span = hi - lo
    if span <= 0:
        return np.array([lo])
    raw = span / n
    mag = 10.0 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = np.ceil(lo / step) * step
    return np.arange(start, hi + 1e-9 * span, step)


def _thin(t: np.ndarray, y: np.ndarray):
    # keep per-bucket min and max so dense switching bands stay visible
    if t.size <= MAX_POINTS:
        return t, y
    buckets = MAX_POINTS // 2
    edges = np.linspace(0, t.size, buckets + 1).astype(int)
    keep = []
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        seg = y[a:b]
        i, j = a + int(np.argmin(seg)), a + int(np.argmax(seg))
        keep.extend(sorted({i, j}))
    keep = np.array(keep)
    return t[keep], y[keep]


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def render(panels: Sequence[Panel], width: int = 720, panel_height: int = 260) -> str:
    """SVG document with ``panels`` stacked vertically."""
    ml, mr, mt, mb = 64, 20, 30, 40
    height = panel_height * len(panels)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    for k, panel in enumerate(panels):
        y_off = k * panel_height
        x0, x1 = ml, width - mr
        y0, y1 = y_off + mt, y_off + panel_height - mb
        clipped = []
        for s in panel.series:
            mask = np.ones(s.t.size, bool)
            if panel.xlim is not None:
                mask = (s.t >= panel.xlim[0]) & (s.t <= panel.xlim[1])
            clipped.append((s, *_thin(s.t[mask], s.y[mask])))
        ts = np.concatenate([c[1] for c in clipped]) if clipped else np.zeros(1)
        ys = np.concatenate([c[2] for c in clipped]) if clipped else np.zeros(1)
        ts = ts if ts.size else np.zeros(1)
        ys = ys if ys.size else np.zeros(1)
        tlo, thi = panel.xlim if panel.xlim is not None else (ts.min(), ts.max())
        ylo, yhi = float(ys.min()), float(ys.max())
        if yhi - ylo < 1e-12:
            ylo, yhi = ylo - 1.0, yhi + 1.0
        pad = 0.05 * (yhi - ylo)
        ylo, yhi = ylo - pad, yhi + pad
        if thi <= tlo:
            thi = tlo + 1.0

        def sx(t):
            return x0 + (np.asarray(t) - tlo) / (thi - tlo) * (x1 - x0)

        def sy(v):
            return y1 - (np.asarray(v) - ylo) / (yhi - ylo) * (y1 - y0)

        out.append(f'<text x="{(x0 + x1) / 2}" y="{y0 - 10}" text-anchor="middle" '
                   f'font-size="13">{escape(panel.title)}</text>')
        out.append(f'<rect x="{x0}" y="{y0}" width="{x1 - x0}" height="{y1 - y0}" '
                   f'fill="none" stroke="#444"/>')
        for tv in _nice_ticks(tlo, thi):
            px = float(sx(tv))
            out.append(f'<line x1="{px:.2f}" y1="{y1}" x2="{px:.2f}" y2="{y1 + 4}" stroke="#444"/>')
            out.append(f'<text x="{px:.2f}" y="{y1 + 16}" text-anchor="middle">{_fmt(tv)}</text>')
        for yv in _nice_ticks(ylo, yhi):
            py = float(sy(yv))
            out.append(f'<line x1="{x0 - 4}" y1="{py:.2f}" x2="{x0}" y2="{py:.2f}" stroke="#444"/>')
            out.append(f'<text x="{x0 - 6}" y="{py + 4:.2f}" text-anchor="end">{_fmt(yv)}</text>')
        out.append(f'<text x="{(x0 + x1) / 2}" y="{y1 + 32}" text-anchor="middle">'
                   f'{escape(panel.xlabel)}</text>')
        for i, (s, t, y) in enumerate(clipped):
            if t.size:
                pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(sx(t), sy(y)))
                dash = DASHES.get(s.style)
                dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
                out.append(f'<polyline fill="none" stroke="{s.color}" stroke-width="1.2"'
                           f'{dash_attr} points="{pts}"/>')
            lx, ly = x1 - 150, y0 + 14 + 14 * i
            dash = DASHES.get(s.style)
            dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
            out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 24}" y2="{ly - 4}" '
                       f'stroke="{s.color}" stroke-width="1.2"{dash_attr}/>')
            out.append(f'<text x="{lx + 30}" y="{ly}">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write(path, panels: Sequence[Panel], **kw) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render(panels, **kw))
