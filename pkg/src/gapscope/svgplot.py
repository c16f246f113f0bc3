"""Minimal deterministic SVG charts for gap sweeps and oscillation traces.

Output depends only on the input numbers: coordinates are printed with a fixed
number of decimals and elements are emitted in a fixed order, so identical
inputs give byte-identical files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .estimation import sinusoid

WIDTH, HEIGHT = 640, 420
MARGIN = {"left": 70, "right": 20, "top": 30, "bottom": 55}
PALETTE = {"est": "#1f5fa8", "bench": "#222222", "exact": "#b03a2e", "band": "#d9d9d9"}
FIT_POINTS = 400


def _f(x: float) -> str:
    return f"{x:.2f}"


def nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if not math.isfinite(lo) or not math.isfinite(hi):
        return []
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step - 1e-9) * step
    ticks = []
    k = 0
    while first + k * step <= hi + 1e-9 * step:
        ticks.append(round(first + k * step, 12))
        k += 1
    return ticks


def _tick_label(x: float) -> str:
    return f"{x:.6g}" if x != 0 else "0"


@dataclass
class Axes:
    xlim: tuple[float, float]
    ylim: tuple[float, float]
    parts: list[str] = field(default_factory=list)

    def _sx(self, x):
        lo, hi = self.xlim
        return MARGIN["left"] + (x - lo) / (hi - lo) * (WIDTH - MARGIN["left"] - MARGIN["right"])

    def _sy(self, y):
        lo, hi = self.ylim
        return HEIGHT - MARGIN["bottom"] - (y - lo) / (hi - lo) * (HEIGHT - MARGIN["top"] - MARGIN["bottom"])

    def band(self, x0, x1, label=""):
        x0 = self.xlim[0] if x0 is None else max(x0, self.xlim[0])
        x1 = self.xlim[1] if x1 is None else min(x1, self.xlim[1])
        if x1 <= x0:
            return
        top, bottom = self._sy(self.ylim[1]), self._sy(self.ylim[0])
        self.parts.append(f'<rect x="{_f(self._sx(x0))}" y="{_f(top)}" width="{_f(self._sx(x1) - self._sx(x0))}" '
                          f'height="{_f(bottom - top)}" fill="{PALETTE["band"]}" fill-opacity="0.6"/>')
        if label:
            self.parts.append(f'<text x="{_f(0.5 * (self._sx(x0) + self._sx(x1)))}" y="{_f(top + 14)}" '
                              f'text-anchor="middle" font-size="11" fill="#555555">{escape(label)}</text>')

    def line(self, xs, ys, color, dash=None, width=1.5):
        pts = [(x, y) for x, y in zip(xs, ys) if math.isfinite(x) and math.isfinite(y)]
        if len(pts) < 2:
            return
        d = " ".join(f"{_f(self._sx(x))},{_f(self._sy(y))}" for x, y in pts)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(f'<polyline points="{d}" fill="none" stroke="{color}" stroke-width="{width}"{extra}/>')

    def markers(self, xs, ys, errs, color):
        for x, y, e in zip(xs, ys, errs):
            if not (math.isfinite(x) and math.isfinite(y)):
                continue
            cx, cy = self._sx(x), self._sy(y)
            if e is not None and math.isfinite(e) and e > 0:
                y0, y1 = self._sy(y - e), self._sy(y + e)
                self.parts.append(f'<line x1="{_f(cx)}" y1="{_f(y0)}" x2="{_f(cx)}" y2="{_f(y1)}" '
                                  f'stroke="{color}" stroke-width="1"/>')
                for yy in (y0, y1):
                    self.parts.append(f'<line x1="{_f(cx - 3)}" y1="{_f(yy)}" x2="{_f(cx + 3)}" '
                                      f'y2="{_f(yy)}" stroke="{color}" stroke-width="1"/>')
            self.parts.append(f'<circle cx="{_f(cx)}" cy="{_f(cy)}" r="3.5" fill="{color}"/>')

    def frame(self, xlabel, ylabel, title):
        left, right = MARGIN["left"], WIDTH - MARGIN["right"]
        top, bottom = MARGIN["top"], HEIGHT - MARGIN["bottom"]
        out = [f'<rect x="{left}" y="{top}" width="{right - left}" height="{bottom - top}" '
               f'fill="none" stroke="#000000" stroke-width="1"/>']
        for x in nice_ticks(*self.xlim):
            sx = self._sx(x)
            out.append(f'<line x1="{_f(sx)}" y1="{bottom}" x2="{_f(sx)}" y2="{bottom + 5}" stroke="#000000"/>')
            out.append(f'<text x="{_f(sx)}" y="{bottom + 18}" text-anchor="middle" font-size="11">'
                       f'{_tick_label(x)}</text>')
        for y in nice_ticks(*self.ylim):
            sy = self._sy(y)
            out.append(f'<line x1="{left - 5}" y1="{_f(sy)}" x2="{left}" y2="{_f(sy)}" stroke="#000000"/>')
            out.append(f'<text x="{left - 8}" y="{_f(sy + 4)}" text-anchor="end" font-size="11">'
                       f'{_tick_label(y)}</text>')
        out.append(f'<text x="{(left + right) / 2:.2f}" y="{HEIGHT - 15}" text-anchor="middle" '
                   f'font-size="13">{escape(xlabel)}</text>')
        out.append(f'<text x="18" y="{(top + bottom) / 2:.2f}" text-anchor="middle" font-size="13" '
                   f'transform="rotate(-90 18 {(top + bottom) / 2:.2f})">{escape(ylabel)}</text>')
        if title:
            out.append(f'<text x="{(left + right) / 2:.2f}" y="20" text-anchor="middle" '
                       f'font-size="14">{escape(title)}</text>')
        self.parts.extend(out)

    def legend(self, entries: Sequence[tuple[str, str, str]]):
        """``entries`` are ``(kind, color, label)`` with kind in marker/line/dash/dot."""
        x, y = WIDTH - MARGIN["right"] - 150, MARGIN["top"] + 14
        for k, (kind, color, label) in enumerate(entries):
            yy = y + 16 * k
            if kind == "marker":
                self.parts.append(f'<circle cx="{x + 10}" cy="{yy - 4}" r="3.5" fill="{color}"/>')
            else:
                dash = {"dash": ' stroke-dasharray="6,4"', "dot": ' stroke-dasharray="2,3"'}.get(kind, "")
                self.parts.append(f'<line x1="{x}" y1="{yy - 4}" x2="{x + 20}" y2="{yy - 4}" '
                                  f'stroke="{color}" stroke-width="1.5"{dash}/>')
            self.parts.append(f'<text x="{x + 28}" y="{yy}" font-size="11">{escape(label)}</text>')

    def render(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
                f'viewBox="0 0 {WIDTH} {HEIGHT}">')
        body = [f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>', *self.parts]
        return "\n".join([head, *body, "</svg>"]) + "\n"


def _limits(values, pad=0.05):
    vals = np.asarray([v for v in values if v is not None and math.isfinite(v)], dtype=float)
    if vals.size == 0:
        return 0.0, 1.0
    lo, hi = float(vals.min()), float(vals.max())
    span = hi - lo if hi > lo else max(abs(hi), 1.0)
    return lo - pad * span, hi + pad * span


def _num(row, key):
    v = row.get(key)
    return float(v) if isinstance(v, (int, float)) else math.nan


def sweep_plot(estimates: list[dict], benchmark: list[dict] | None = None,
               bands: Sequence[dict] = (), xlabel="h3 / J1", ylabel="gap", title="") -> str:
    """Estimated gaps with error bars, optional dashed exact curve and shaded bands.

    Rows of the two tables are matched on ``sweep_value``.
    """
    est = sorted(estimates, key=lambda r: _num(r, "sweep_value"))
    bench = sorted(benchmark or [], key=lambda r: _num(r, "sweep_value"))
    xs = [_num(r, "sweep_value") for r in est] + [_num(r, "sweep_value") for r in bench]
    ys = [_num(r, "gap_est") + _num(r, "gap_std") if math.isfinite(_num(r, "gap_std")) else _num(r, "gap_est")
          for r in est]
    ys += [_num(r, "gap_est") - _num(r, "gap_std") if math.isfinite(_num(r, "gap_std")) else _num(r, "gap_est")
           for r in est]
    ys += [_num(r, "gap_exact") for r in bench]
    ax = Axes(_limits(xs, 0.03), _limits(ys))
    for b in bands:
        ax.band(b.get("from"), b.get("to"), b.get("label", ""))
    entries = []
    if bench:
        ax.line([_num(r, "sweep_value") for r in bench], [_num(r, "gap_exact") for r in bench],
                PALETTE["bench"], dash="6,4")
        entries.append(("dash", PALETTE["bench"], "exact"))
    ax.markers([_num(r, "sweep_value") for r in est], [_num(r, "gap_est") for r in est],
               [_num(r, "gap_std") for r in est], PALETTE["est"])
    entries.append(("marker", PALETTE["est"], "estimate"))
    ax.frame(xlabel, ylabel, title)
    ax.legend(entries)
    return ax.render()


def waves_plot(series: list[dict], estimate: dict | None = None, sweep_value: float | None = None,
               title="") -> str:
    """Measured samples, the fitted sinusoid and (dotted) the exact trace for one sweep point."""
    values = sorted({_num(r, "sweep_value") for r in series})
    if not values:
        raise ValueError("series table is empty")
    if sweep_value is None:
        sweep_value = values[0]
    pick = [r for r in series if abs(_num(r, "sweep_value") - sweep_value) <= 1e-12]
    if not pick:
        raise ValueError(f"no series rows at sweep value {sweep_value}")
    meas = sorted((r for r in pick if r["kind"] == "measured"), key=lambda r: _num(r, "time"))
    exact = sorted((r for r in pick if r["kind"] == "exact"), key=lambda r: _num(r, "time"))
    t_all = [_num(r, "time") for r in meas + exact]
    fit_t = np.linspace(min(t_all), max(t_all), FIT_POINTS)
    fit_y = None
    if estimate is not None:
        fit_y = sinusoid(fit_t, _num(estimate, "offset"), _num(estimate, "amplitude"),
                         _num(estimate, "gap_est"), _num(estimate, "phase"))
    ys = [_num(r, "value") for r in meas + exact]
    ys += [_num(r, "value") + _num(r, "sigma") for r in meas] + [_num(r, "value") - _num(r, "sigma") for r in meas]
    if fit_y is not None:
        ys += list(fit_y)
    ax = Axes(_limits(t_all, 0.02), _limits(ys))
    entries = []
    if exact:
        ax.line([_num(r, "time") for r in exact], [_num(r, "value") for r in exact],
                PALETTE["exact"], dash="2,3")
        entries.append(("dot", PALETTE["exact"], "exact"))
    if fit_y is not None:
        ax.line(fit_t, fit_y, PALETTE["bench"])
        entries.append(("line", PALETTE["bench"], "fit"))
    ax.markers([_num(r, "time") for r in meas], [_num(r, "value") for r in meas],
               [_num(r, "sigma") for r in meas], PALETTE["est"])
    entries.append(("marker", PALETTE["est"], "measured"))
    ax.frame("t", "<O(t)>", title or f"sweep value {sweep_value:g}")
    ax.legend(entries)
    return ax.render()
