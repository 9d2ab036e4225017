"""Hand-emitted SVG charts.

Output is a pure function of the input data: fixed element order, every
coordinate printed with three decimals, no timestamps or ids.
"""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

from .domain import PowerLawFit, RunGrid
from .powerlaw import TiePolicy, budget_optimum, evaluate

W, H = 640, 420
MARGIN = dict(left=70, right=150, top=40, bottom=55)

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")
# blue -> red, five stops
RAMP = ((0.0, (49, 54, 149)), (0.25, (116, 173, 209)), (0.5, (255, 255, 191)), (0.75, (244, 109, 67)), (1.0, (165, 0, 38)))
GOLD = "#d4af37"


def _f(v: float) -> str:
    s = f"{v:.3f}"
    return "0.000" if s == "-0.000" else s


def ramp_color(frac: float) -> str:
    frac = min(1.0, max(0.0, frac))
    for (f0, c0), (f1, c1) in zip(RAMP, RAMP[1:]):
        if frac <= f1:
            w = (frac - f0) / (f1 - f0)
            rgb = [round(a + w * (b - a)) for a, b in zip(c0, c1)]
            return "#{:02x}{:02x}{:02x}".format(*rgb)
    return "#{:02x}{:02x}{:02x}".format(*RAMP[-1][1])


class Axis:
    def __init__(self, lo, hi, p0, p1, log=False):
        if log:
            lo, hi = math.log10(lo), math.log10(hi)
        if hi == lo:
            lo, hi = lo - 0.5, hi + 0.5
        pad = 0.05 * (hi - lo)
        self.lo, self.hi = lo - pad, hi + pad
        self.p0, self.p1, self.log = p0, p1, log

    def __call__(self, v):
        if self.log:
            v = math.log10(v)
        return self.p0 + (v - self.lo) / (self.hi - self.lo) * (self.p1 - self.p0)

    def ticks(self, n=5):
        if self.log:
            out = []
            for e in range(math.floor(self.lo), math.ceil(self.hi) + 1):
                for m in (1, 2, 5):
                    v = m * 10.0**e
                    if self.lo <= math.log10(v) <= self.hi:
                        out.append(v)
            return out
        step = (self.hi - self.lo) / n
        return [self.lo + step * (i + 0.5) for i in range(n)]


class Canvas:
    def __init__(self, title: str, width: int = W, height: int = H):
        self.w, self.h = width, height
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        ]
        self.text(width / 2, 22, title, size=15, anchor="middle")

    def text(self, x, y, s, size=11, anchor="start", rotate=None):
        tr = f' transform="rotate({rotate} {_f(x)} {_f(y)})"' if rotate is not None else ""
        self.parts.append(
            f'<text x="{_f(x)}" y="{_f(y)}" font-family="sans-serif" font-size="{size}" text-anchor="{anchor}"{tr}>{escape(str(s))}</text>'
        )

    def line(self, x0, y0, x1, y1, stroke="black", width=1.0, dash=None):
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<line x1="{_f(x0)}" y1="{_f(y0)}" x2="{_f(x1)}" y2="{_f(y1)}" stroke="{stroke}" stroke-width="{_f(width)}"{d}/>'
        )

    def polyline(self, pts, stroke, width=1.5, dash=None):
        d = f' stroke-dasharray="{dash}"' if dash else ""
        coords = " ".join(f"{_f(x)},{_f(y)}" for x, y in pts)
        self.parts.append(f'<polyline points="{coords}" fill="none" stroke="{stroke}" stroke-width="{_f(width)}"{d}/>')

    def circle(self, x, y, r, fill):
        self.parts.append(f'<circle cx="{_f(x)}" cy="{_f(y)}" r="{_f(r)}" fill="{fill}"/>')

    def rect(self, x, y, w, h, fill="none", stroke=None, width=1.0):
        s = f' stroke="{stroke}" stroke-width="{_f(width)}"' if stroke else ""
        self.parts.append(f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}" fill="{fill}"{s}/>')

    def axes(self, xa: Axis, ya: Axis, xlabel: str, ylabel: str, xfmt="{:g}", yfmt="{:.3f}"):
        x0, x1 = xa.p0, xa.p1
        y0, y1 = ya.p0, ya.p1
        self.line(x0, y0, x1, y0)
        self.line(x0, y0, x0, y1)
        for t in xa.ticks():
            x = xa(t)
            self.line(x, y0, x, y0 + 4)
            self.text(x, y0 + 16, xfmt.format(t), size=10, anchor="middle")
        for t in ya.ticks():
            y = ya(t)
            self.line(x0 - 4, y, x0, y)
            self.text(x0 - 6, y + 3, yfmt.format(t), size=10, anchor="end")
        self.text((x0 + x1) / 2, self.h - 12, xlabel, anchor="middle")
        self.text(16, (y0 + y1) / 2, ylabel, anchor="middle", rotate=-90)

    def legend(self, entries: Sequence[tuple[str, str, str | None]]):
        x = self.w - MARGIN["right"] + 15
        y = MARGIN["top"] + 10
        for label, color, dash in entries:
            self.line(x, y, x + 20, y, stroke=color, width=2, dash=dash)
            self.text(x + 26, y + 4, label, size=10)
            y += 16

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _frame(xlo, xhi, ylo, yhi, xlog=False, ylog=False):
    xa = Axis(xlo, xhi, MARGIN["left"], W - MARGIN["right"], log=xlog)
    ya = Axis(ylo, yhi, H - MARGIN["bottom"], MARGIN["top"], log=ylog)
    return xa, ya


def _fmt_budget(b: float) -> str:
    return f"{b / 60:g}h" if b >= 60 else f"{b:g}min"


def u_curves(grid: RunGrid) -> str:
    """BPB against model size, one line per budget."""
    table = grid.bpb_table()
    models = grid.models()
    params = [p for _, _, p in models]
    vals = [v for cells in table.values() for v in cells.values()]
    xa, ya = _frame(min(params), max(params), min(vals), max(vals), xlog=True)
    c = Canvas("Validation BPB vs model size")
    c.axes(xa, ya, "parameters (M)", "BPB")
    legend = []
    for i, b in enumerate(grid.budgets):
        color = PALETTE[i % len(PALETTE)]
        pts = [(xa(p), ya(table[m][b])) for m, _, p in models if b in table[m]]
        if len(pts) > 1:
            c.polyline(pts, color)
        for x, y in pts:
            c.circle(x, y, 2.5, color)
        legend.append((_fmt_budget(b), color, None))
    c.legend(legend)
    return c.render()


def _law_chart(title, points, fit: PowerLawFit, ylabel, extra=None, ylog=True):
    xs = [x for x, _ in points]
    ys = [y for _, y in points]
    lo, hi = min(xs), max(xs)
    grid_x = [lo * (hi / lo) ** (i / 60) for i in range(61)] if hi > lo else [lo]
    curves = [("fit: a={:.3g}, alpha={:.3f}".format(fit.coeff_a, fit.exponent_alpha), "#d62728", None,
               [(x, evaluate(fit, x)) for x in grid_x])]
    if extra:
        curves.append(extra(grid_x))
    all_y = ys + [y for *_, pts in curves for _, y in pts]
    xa, ya = _frame(lo, hi, min(all_y), max(all_y), xlog=True, ylog=ylog)
    c = Canvas(title)
    c.axes(xa, ya, "budget (min)", ylabel, yfmt="{:g}" if ylog else "{:.3f}")
    for label, color, dash, pts in curves:
        c.polyline([(xa(x), ya(y)) for x, y in pts], color, width=2, dash=dash)
    for x, y in points:
        c.circle(xa(x), ya(y), 4, "black")
    c.legend([("optima", "black", None)] + [(lab, col, d) for lab, col, d, _ in curves])
    return c.render()


def size_law(anchors: Sequence[tuple[float, float]], fit: PowerLawFit, reference_alpha: float = 0.50) -> str:
    """Anchors, fitted law and a Chinchilla-rate reference through the first anchor."""
    t0 = min(x for x, _ in anchors)
    n0 = evaluate(fit, t0)

    def chinchilla(xs):
        return (f"Chinchilla alpha={reference_alpha:.2f}", "#1f77b4", "2,4", [(x, n0 * (x / t0) ** reference_alpha) for x in xs])

    return _law_chart("Optimal model size vs budget", anchors, fit, "parameters (M)", chinchilla)


def loss_law(points: Sequence[tuple[float, float]], fit: PowerLawFit) -> str:
    return _law_chart("Best BPB vs budget", points, fit, "BPB", ylog=False)


def heatmap(grid: RunGrid, tie: TiePolicy = TiePolicy()) -> str:
    """Budget x model BPB grid; gold boxes mark each budget's optimum (all tied cells)."""
    table = grid.bpb_table()
    models = grid.models()
    budgets = grid.budgets
    vals = [v for cells in table.values() for v in cells.values()]
    vmin, vmax = min(vals), max(vals)
    span = vmax - vmin or 1.0

    left, top = 80, 40
    cell_w = (W - left - 90) / len(budgets)
    cell_h = (H - top - 50) / len(models)
    c = Canvas("BPB heatmap (gold = optimum)")
    for j, b in enumerate(budgets):
        c.text(left + (j + 0.5) * cell_w, H - 32, _fmt_budget(b), size=10, anchor="middle")
    optima = {b: {t[0] for t in budget_optimum(grid, b, tie.epsilon_bpb)[0]} for b in budgets}
    boxes = []
    for i, (m, _, p) in enumerate(models):
        y = top + i * cell_h
        c.text(left - 6, y + cell_h / 2 + 4, m, size=10, anchor="end")
        for j, b in enumerate(budgets):
            x = left + j * cell_w
            v = table[m].get(b)
            if v is None:
                c.rect(x, y, cell_w, cell_h, fill="#eeeeee")
                continue
            c.rect(x, y, cell_w, cell_h, fill=ramp_color((v - vmin) / span))
            c.text(x + cell_w / 2, y + cell_h / 2 + 4, f"{v:.3f}", size=9, anchor="middle")
            if m in optima[b]:
                boxes.append((x, y))
    for x, y in boxes:
        c.rect(x + 1, y + 1, cell_w - 2, cell_h - 2, stroke=GOLD, width=3)
    c.text(left + len(budgets) * cell_w / 2, H - 12, "budget", anchor="middle")
    # color bar
    bx = W - 70
    for k in range(20):
        c.rect(bx, top + k * (H - top - 50) / 20, 14, (H - top - 50) / 20 + 0.5, fill=ramp_color(k / 19))
    c.text(bx + 18, top + 8, f"{vmin:.3f}", size=9)
    c.text(bx + 18, H - 52, f"{vmax:.3f}", size=9)
    return c.render()
