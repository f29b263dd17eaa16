"""Static SVG figures: token heatmaps, ROC curves, AUC lines, histograms.

Output is plain text built from fixed-precision numbers, so identical
inputs give byte-identical documents.
"""
from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .errors import DimensionError, EmptyVector

HUES = {"human": "#d95f02", "model": "#1b9e77", "heuristic": "#7570b3"}
PALETTE = ("#e6550d", "#3182bd", "#31a354", "#756bb1", "#636363", "#de2d26")
BACKGROUND = "#ffffff"
CELL = 28
FRAME = (60.0, 30.0, 360.0, 300.0)  # left, top, width, height


def _f(x) -> str:
    return f"{float(x):.2f}"


def _doc(width, height, body) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(width)}" '
            f'height="{_f(height)}" viewBox="0 0 {_f(width)} {_f(height)}">')
    return "\n".join([head, f'<rect width="100%" height="100%" fill="{BACKGROUND}"/>',
                      *body, "</svg>"]) + "\n"


def _text(x, y, s, size=11, anchor="start", rotate=None):
    tr = f' transform="rotate({rotate} {_f(x)} {_f(y)})"' if rotate is not None else ""
    return (f'<text x="{_f(x)}" y="{_f(y)}" font-family="sans-serif" font-size="{size}" '
            f'text-anchor="{anchor}"{tr}>{escape(str(s))}</text>')


# -- heatmaps ---------------------------------------------------------------

@dataclass(frozen=True)
class HeatmapSpec:
    row_tokens: tuple
    col_tokens: tuple
    values: np.ndarray
    title: str = ""
    hue: str = HUES["heuristic"]

    @classmethod
    def vector(cls, tokens, scores, title="", hue=HUES["heuristic"]):
        """One-row heatmap over a single sentence."""
        return cls(("",), tuple(tokens), np.asarray(scores, float)[None, :], title, hue)


def render_heatmap(spec: HeatmapSpec) -> str:
    vals = np.asarray(spec.values, dtype=np.float64)
    if vals.ndim == 1:
        vals = vals[None, :]
    if vals.shape != (len(spec.row_tokens), len(spec.col_tokens)):
        raise DimensionError(
            f"heatmap values {vals.shape} vs {len(spec.row_tokens)}x{len(spec.col_tokens)} tokens")
    vals = np.clip(vals, 0.0, 1.0)
    n, m = vals.shape
    left = 20 + 7 * max((len(str(t)) for t in spec.row_tokens), default=0)
    top = 30 + 7 * max((len(str(t)) for t in spec.col_tokens), default=0)
    body = [_text(left, 16, spec.title, size=13)]
    for j, tok in enumerate(spec.col_tokens):
        x = left + j * CELL + CELL / 2
        body.append(_text(x, top - 6, tok, anchor="start", rotate=-60))
    for i, tok in enumerate(spec.row_tokens):
        y = top + i * CELL
        body.append(_text(left - 4, y + CELL * 0.65, tok, anchor="end"))
        for j in range(m):
            x = left + j * CELL
            v = vals[i, j]
            if v == 0.0:
                body.append(f'<rect class="cell" x="{_f(x)}" y="{_f(y)}" width="{CELL}" '
                            f'height="{CELL}" fill="{BACKGROUND}" stroke="#dddddd"/>')
            else:
                body.append(f'<rect class="cell" x="{_f(x)}" y="{_f(y)}" width="{CELL}" '
                            f'height="{CELL}" fill="{spec.hue}" fill-opacity="{v:.4f}" '
                            f'stroke="#dddddd"/>')
    # colour bar
    bx = left + m * CELL + 20
    steps = 10
    for k in range(steps + 1):
        level = 1.0 - k / steps
        body.append(f'<rect class="colorbar" x="{_f(bx)}" y="{_f(top + k * 12)}" width="12" '
                    f'height="12" fill="{spec.hue}" fill-opacity="{level:.4f}"/>')
    body.append(_text(bx + 16, top + 10, "1.0", size=9))
    body.append(_text(bx + 16, top + steps * 12 + 10, "0.0", size=9))
    width = bx + 50
    height = max(top + n * CELL, top + (steps + 1) * 12) + 20
    return _doc(width, height, body)


# -- charts -------------------------------------------------------------------

def _frame(xlabel, ylabel, xlim, ylim, title):
    x0, y0, w, h = FRAME
    body = [f'<rect class="frame" x="{_f(x0)}" y="{_f(y0)}" width="{_f(w)}" height="{_f(h)}" '
            f'fill="none" stroke="#000000"/>',
            _text(x0 + w / 2, y0 + h + 34, xlabel, anchor="middle"),
            _text(16, y0 + h / 2, ylabel, anchor="middle", rotate=-90),
            _text(x0 + w / 2, 18, title, size=13, anchor="middle")]
    for k in range(6):
        fx = xlim[0] + (xlim[1] - xlim[0]) * k / 5
        fy = ylim[0] + (ylim[1] - ylim[0]) * k / 5
        body.append(_text(x0 + w * k / 5, y0 + h + 16, f"{fx:.2g}", size=9, anchor="middle"))
        body.append(_text(x0 - 6, y0 + h - h * k / 5 + 3, f"{fy:.2g}", size=9, anchor="end"))
    return body


def _mapper(xlim, ylim):
    x0, y0, w, h = FRAME

    def to_xy(x, y):
        fx = (np.clip(x, *xlim) - xlim[0]) / (xlim[1] - xlim[0])
        fy = (np.clip(y, *ylim) - ylim[0]) / (ylim[1] - ylim[0])
        return x0 + w * fx, y0 + h - h * fy
    return to_xy


def _polyline(points, color, dashed=False, cls="series"):
    pts = " ".join(f"{_f(x)},{_f(y)}" for x, y in points)
    dash = ' stroke-dasharray="6,4"' if dashed else ""
    return (f'<polyline class="{cls}" points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="2"{dash}/>')


def _legend(names, colors):
    x0, y0, w, _ = FRAME
    body = []
    for k, (name, color) in enumerate(zip(names, colors)):
        y = y0 + 14 + 16 * k
        body.append(f'<rect class="legend-swatch" x="{_f(x0 + w + 12)}" y="{_f(y - 9)}" '
                    f'width="10" height="10" fill="{color}"/>')
        body.append(f'<text class="legend" x="{_f(x0 + w + 26)}" y="{_f(y)}" '
                    f'font-family="sans-serif" font-size="11">{escape(str(name))}</text>')
    return body


def _items(named):
    return list(named.items()) if isinstance(named, dict) else list(named)


def _color(name, k):
    return HUES.get(name, PALETTE[k % len(PALETTE)])


def _chart_size():
    x0, y0, w, h = FRAME
    return x0 + w + 160, y0 + h + 50


def render_roc(curves) -> str:
    """ROC chart; ``curves`` maps names to :class:`RocCurve` (order kept)."""
    items = _items(curves)
    if not items:
        raise EmptyVector("no ROC curve to draw")
    to_xy = _mapper((0.0, 1.0), (0.0, 1.0))
    body = _frame("false positive rate", "true positive rate", (0, 1), (0, 1), "ROC")
    body.append(_polyline([to_xy(0, 0), to_xy(1, 1)], "#3182bd", dashed=True, cls="chance"))
    colors = []
    for k, (name, curve) in enumerate(items):
        fpr, tpr = curve.closed()
        order = np.lexsort((tpr, fpr))
        color = _color(name, k)
        colors.append(color)
        body.append(_polyline([to_xy(x, y) for x, y in zip(fpr[order], tpr[order])], color))
    body += _legend([n for n, _ in items], colors)
    return _doc(*_chart_size(), body)


def render_auc_lines(epsilons, series) -> str:
    """Line chart of each named series (values aligned with ``epsilons``).

    ``None`` entries (undefined points) break the line.
    """
    items = _items(series)
    eps = np.asarray(epsilons, dtype=np.float64)
    if eps.size == 0 or not items:
        raise EmptyVector("nothing to plot")
    to_xy = _mapper((0.0, 1.0), (0.0, 1.0))
    body = _frame("heuristic threshold", "AUC", (0, 1), (0, 1), "AUC vs threshold")
    colors = []
    for k, (name, values) in enumerate(items):
        color = _color(name, k)
        colors.append(color)
        run = []
        for e, v in zip(eps, values):
            if v is None:
                if len(run) > 1:
                    body.append(_polyline(run, color))
                run = []
                continue
            run.append(to_xy(e, v))
        if len(run) > 1:
            body.append(_polyline(run, color))
    body += _legend([n for n, _ in items], colors)
    return _doc(*_chart_size(), body)


def histogram(values, bins=40, value_range=(0.0, 1.0)) -> np.ndarray:
    counts, _ = np.histogram(np.asarray(values, dtype=np.float64), bins=bins, range=value_range)
    return counts


def render_histograms(series, bins=40, value_range=(0.0, 1.0), title="") -> str:
    """Overlaid histograms of each named series over ``value_range``."""
    items = _items(series)
    if not items:
        raise EmptyVector("no series to bin")
    counts = [histogram(v, bins, value_range) for _, v in items]
    top = max(1, max(int(c.max()) for c in counts))
    to_xy = _mapper(value_range, (0.0, float(top)))
    body = _frame("value", "sentences", value_range, (0, top), title)
    width = (value_range[1] - value_range[0]) / bins
    colors = []
    for k, ((name, _), c) in enumerate(zip(items, counts)):
        color = _color(name, k)
        colors.append(color)
        for b, n in enumerate(c):
            if n == 0:
                continue
            lo = value_range[0] + b * width
            xa, ya = to_xy(lo, n)
            xb, yb = to_xy(lo + width, 0)
            body.append(f'<rect class="bar" x="{_f(xa)}" y="{_f(ya)}" width="{_f(xb - xa)}" '
                        f'height="{_f(yb - ya)}" fill="{color}" fill-opacity="0.5"/>')
    body += _legend([n for n, _ in items], colors)
    return _doc(*_chart_size(), body)
