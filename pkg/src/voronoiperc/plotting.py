"""Deterministic SVG emitters for result curves and exploration traces.

Plain hand-written SVG keeps the output a pure function of the input
(no timestamps, no font probing), which suits the reproducibility
contract of the CLI.
"""

from __future__ import annotations

import json
import math

from .io import ResultSet

__all__ = ["curve_svg", "trace_svg", "results_curve_svg"]

_W, _H = 640, 480
_ML, _MR, _MT, _MB = 70, 20, 20, 50


def _esc(x: float) -> str:
    return f"{x:.3f}"


class _Canvas:
    def __init__(self):
        self.parts = [f'<svg xmlns="http://www.w3.org/2000/svg" '
                      f'width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
                      f'<rect width="{_W}" height="{_H}" fill="white"/>']

    def line(self, x1, y1, x2, y2, color="black", width=1.0, dash=None):
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(f'<line x1="{_esc(x1)}" y1="{_esc(y1)}" x2="{_esc(x2)}" '
                          f'y2="{_esc(y2)}" stroke="{color}" stroke-width="{width}"{d}/>')

    def rect(self, x, y, w, h, fill, opacity=1.0, stroke="none"):
        self.parts.append(f'<rect x="{_esc(x)}" y="{_esc(y)}" width="{_esc(w)}" '
                          f'height="{_esc(h)}" fill="{fill}" fill-opacity="{opacity}" '
                          f'stroke="{stroke}"/>')

    def circle(self, x, y, r, fill):
        self.parts.append(f'<circle cx="{_esc(x)}" cy="{_esc(y)}" r="{r}" fill="{fill}"/>')

    def text(self, x, y, s, size=12, anchor="middle"):
        self.parts.append(f'<text x="{_esc(x)}" y="{_esc(y)}" font-size="{size}" '
                          f'font-family="monospace" text-anchor="{anchor}">{s}</text>')

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _ticks(lo: float, hi: float, count: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def curve_svg(xs, ys, errs=None, *, xlabel="x", ylabel="y", logx=False,
              logy=False, window=None) -> str:
    """Scatter-with-errorbars plot; ``window`` shades an x-interval."""
    if len(xs) == 0:
        raise ValueError("no points to plot")
    fx = (lambda v: math.log10(v)) if logx else (lambda v: v)
    fy = (lambda v: math.log10(v)) if logy else (lambda v: v)
    px = [fx(v) for v in xs]
    py = [fy(v) for v in ys]
    lo_x, hi_x = min(px), max(px)
    pad = 0.05 * (hi_x - lo_x or 1.0)
    lo_x, hi_x = lo_x - pad, hi_x + pad
    err = [0.0] * len(py) if errs is None else list(errs)
    lo_y = min(fy(max(y - e, 1e-12) if logy else y - e) for y, e in zip(ys, err))
    hi_y = max(fy(y + e) for y, e in zip(ys, err))
    pad = 0.05 * (hi_y - lo_y or 1.0)
    lo_y, hi_y = lo_y - pad, hi_y + pad

    def X(v):
        return _ML + (v - lo_x) / (hi_x - lo_x) * (_W - _ML - _MR)

    def Y(v):
        return _H - _MB - (v - lo_y) / (hi_y - lo_y) * (_H - _MT - _MB)

    cv = _Canvas()
    if window is not None:
        wa, wb = fx(window[0]), fx(window[1])
        cv.rect(X(wa), _MT, max(0.0, X(wb) - X(wa)), _H - _MT - _MB,
                fill="#9ecae1", opacity=0.4)
    cv.line(_ML, _H - _MB, _W - _MR, _H - _MB)
    cv.line(_ML, _MT, _ML, _H - _MB)
    for t in _ticks(lo_x, hi_x):
        cv.line(X(t), _H - _MB, X(t), _H - _MB + 5)
        label = f"{10 ** t:.3g}" if logx else f"{t:.3g}"
        cv.text(X(t), _H - _MB + 18, label, size=10)
    for t in _ticks(lo_y, hi_y):
        cv.line(_ML - 5, Y(t), _ML, Y(t))
        label = f"{10 ** t:.3g}" if logy else f"{t:.3g}"
        cv.text(_ML - 8, Y(t) + 4, label, size=10, anchor="end")
    cv.text((_ML + _W - _MR) / 2, _H - 8, xlabel)
    cv.text(14, (_MT + _H - _MB) / 2, ylabel, anchor="middle")
    prev = None
    for x, y, e in zip(px, py, err):
        if e > 0 and not logy:
            cv.line(X(x), Y(y - e), X(x), Y(y + e), color="#555", width=1.0)
        if prev is not None:
            cv.line(X(prev[0]), Y(prev[1]), X(x), Y(y), color="#3182bd", width=1.2)
        prev = (x, y)
        cv.circle(X(x), Y(y), 3, "#08519c")
    return cv.render()


def results_curve_svg(rs: ResultSet, kind: str = "curve") -> str:
    """Plot a result set: crossing curves on p, other ops on n (log-log)."""
    curve_pts = [(r.params.get("p"), r.mean, r.std_error)
                 for r in rs.records if r.op == "crossing_curve"]
    if curve_pts:
        window = None
        for r in rs.records:
            if r.op == "threshold_window":
                window = (r.params["p_lo"], r.params["p_hi"])
        xs, ys, es = zip(*sorted(curve_pts))
        return curve_svg(xs, ys, es, xlabel="p", ylabel="P[crossing]",
                         window=window)
    pts = [(r.params.get("n"), r.mean, r.std_error)
           for r in rs.records if r.params.get("n") is not None]
    if not pts:
        raise ValueError("result set holds nothing plottable")
    xs, ys, es = zip(*sorted(pts))
    logy = all(y > 0 for y in ys)
    return curve_svg(xs, ys, es, xlabel="n", ylabel="estimate",
                     logx=True, logy=logy)


def trace_svg(trace_json: str) -> str:
    """Render an exploration trace: grid, explored/safe cells, the line."""
    tr = json.loads(trace_json)
    g = tr["grid"]
    side = min(_W, _H) - 60
    ox, oy = (_W - side) / 2, (_H - side) / 2

    def X(x):
        return ox + x * side

    def Y(y):
        return oy + (1.0 - y) * side

    cv = _Canvas()
    explored = set(tr["explored_cells"])
    safe = set(tr["safe_cells"])
    m = 1.0 / g
    for c in sorted(explored):
        cx, cy = divmod(c, g)
        fill = "#31a354" if c in safe else "#c7e9c0"
        cv.rect(X(cx * m), Y((cy + 1) * m), side * m, side * m, fill=fill,
                opacity=0.7)
    for i in range(g + 1):
        cv.line(X(i * m), Y(0), X(i * m), Y(1), color="#999", width=0.5)
        cv.line(X(0), Y(i * m), X(1), Y(i * m), color="#999", width=0.5)
    cv.rect(X(0), Y(1), side, side, fill="none", stroke="black")
    cv.line(X(tr["x0"]), Y(0), X(tr["x0"]), Y(1), color="#e6550d", width=1.5,
            dash="6,3")
    for q in tr.get("queried_xy", []):
        cv.circle(X(q[0]), Y(q[1]), 2, "#08519c")
    cv.text(_W / 2, _H - 10,
            f"grid {g}x{g}  output {tr['output']}  full_reveal {tr['full_reveal']}")
    return cv.render()
