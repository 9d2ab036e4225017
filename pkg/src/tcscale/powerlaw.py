"""Log-log power-law regression and the anchor pipelines built on it.

Every fit is ordinary least squares on ``(ln x, ln y)``. Anchors are
``(budget, optimum)`` pairs extracted from a grid, one per budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from . import kernels
from .domain import PowerLawFit, RunGrid
from .errors import DomainError, InsufficientData, InvalidArgument, SingularFit

TIE_MODES = ("arithmetic_mean", "pick_larger", "pick_smaller", "exclude_budget")


@dataclass(frozen=True)
class TiePolicy:
    mode: str = "arithmetic_mean"
    epsilon_bpb: float = 0.0005

    def __post_init__(self):
        if self.mode not in TIE_MODES:
            raise InvalidArgument(f"unknown tie mode {self.mode!r}")
        if not 0 <= self.epsilon_bpb < 0.01:
            raise InvalidArgument("epsilon_bpb must lie in [0, 0.01)")

    def resolve(self, values: Sequence[float]) -> float | None:
        """Collapse the values of a tie set; ``None`` means drop the budget."""
        if len(values) == 1:
            return float(values[0])
        if self.mode == "arithmetic_mean":
            return math.fsum(values) / len(values)
        if self.mode == "pick_larger":
            return float(max(values))
        if self.mode == "pick_smaller":
            return float(min(values))
        return None


def _log_points(points) -> tuple[np.ndarray, np.ndarray]:
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 2:
        raise InsufficientData(f"need at least 2 points, got {len(pts)}")
    for x, y in pts:
        if not (x > 0 and y > 0) or not (math.isfinite(x) and math.isfinite(y)):
            raise DomainError(f"power-law points must be positive and finite, got ({x}, {y})")
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    return np.log(x), np.log(y)


def fit_power_law(points: Iterable[tuple[float, float]], x_unit: str = "", y_unit: str = "") -> PowerLawFit:
    """Fit ``y = a * x**alpha`` by OLS in log space.

    The 95% interval uses Student-t with ``n - 2`` degrees of freedom; with
    two points it is infinite and the fit carries a ``degenerate_ci`` flag.
    """
    points = list(points)
    lx, ly = _log_points(points)
    n = len(lx)
    if np.ptp(lx) == 0:
        raise SingularFit("all x values are identical")

    xm, ym = lx.mean(), ly.mean()
    dx = lx - xm
    dy = ly - ym
    sxx = float(dx @ dx)
    slope = float(dx @ dy) / sxx
    intercept = ym - slope * xm
    resid = ly - (intercept + slope * lx)
    ss_res = float(resid @ resid)
    ss_tot = float(dy @ dy)

    flags = []
    if ss_tot == 0:
        r2 = math.nan
        flags.append("r2_undefined")
    else:
        r2 = 1.0 - ss_res / ss_tot

    if n > 2:
        stderr = math.sqrt(ss_res / (n - 2) / sxx)
        half = float(stats.t.ppf(0.975, n - 2)) * stderr
        lo, hi = slope - half, slope + half
    else:
        stderr = 0.0
        lo, hi = -math.inf, math.inf
        flags.append("degenerate_ci")

    xs = [p[0] for p in points]
    return PowerLawFit(
        coeff_a=math.exp(intercept),
        exponent_alpha=slope,
        r2=r2,
        stderr_alpha=stderr,
        ci95_low=lo,
        ci95_high=hi,
        n_points=n,
        x_unit=x_unit,
        y_unit=y_unit,
        x_min=float(min(xs)),
        x_max=float(max(xs)),
        flags=tuple(flags),
    )


def bootstrap_ci(points, resamples: int = 10_000, seed: int = 0) -> tuple[float, float]:
    """Percentile bootstrap (2.5%, 97.5%) of the exponent.

    Resample ``i`` always comes from the same draw, so the interval does not
    depend on how slopes get evaluated. Resamples with fewer than two
    distinct x are redrawn from a substream keyed on ``(seed, i, attempt)``.
    """
    points = list(points)
    if resamples < 100:
        raise InvalidArgument("resamples must be at least 100")
    if len(points) < 3:
        raise InvalidArgument("bootstrap needs at least 3 points")
    lx, ly = _log_points(points)
    n = len(lx)
    if np.ptp(lx) == 0:
        raise InvalidArgument("bootstrap needs at least 2 distinct x")

    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(resamples, n), dtype=np.int64)
    for i in range(resamples):
        attempt = 0
        while np.ptp(lx[idx[i]]) == 0:
            attempt += 1
            idx[i] = np.random.default_rng([seed, i, attempt]).integers(0, n, size=n, dtype=np.int64)

    slopes = kernels.bootstrap_slopes(np.ascontiguousarray(lx), np.ascontiguousarray(ly), idx)
    lo, hi = np.percentile(slopes, [2.5, 97.5])
    return float(lo), float(hi)


def evaluate(fit: PowerLawFit, x: float) -> float:
    if not x > 0:
        raise DomainError(f"x must be positive, got {x}")
    return fit.coeff_a * x**fit.exponent_alpha


# --- anchor pipelines -----------------------------------------------------


def budget_optimum(grid: RunGrid, budget: float, epsilon: float):
    """``(tie records, best bpb)`` at one budget, seeds averaged per model."""
    table = grid.bpb_table()
    cells = []
    for model_id, depth, params in grid.models():
        v = table[model_id].get(budget)
        if v is not None:
            cells.append((model_id, depth, params, v))
    if not cells:
        return [], math.nan
    best = min(c[3] for c in cells)
    return [c for c in cells if c[3] <= best + epsilon], best


def anchors(grid: RunGrid, tie: TiePolicy, field: str = "params") -> list[tuple[float, float]]:
    """Per-budget optimum, tie-resolved; ``field`` is ``"params"`` or ``"depth"``."""
    out = []
    for b in grid.budgets:
        tied, _ = budget_optimum(grid, b, tie.epsilon_bpb)
        if not tied:
            continue
        values = [t[2] if field == "params" else t[1] for t in tied]
        v = tie.resolve(values)
        if v is not None:
            out.append((b, v))
    return out


def _need_budgets(pts, k=2):
    if len(pts) < k:
        raise InsufficientData(f"need at least {k} usable budgets, got {len(pts)}")


def fit_optimal_size_law(grid: RunGrid, tie: TiePolicy = TiePolicy()) -> tuple[PowerLawFit, list[tuple[float, float]]]:
    pts = anchors(grid, tie, "params")
    _need_budgets(pts)
    return fit_power_law(pts, "min", "Mparams"), pts


def best_bpb_by_budget(grid: RunGrid) -> list[tuple[float, float]]:
    table = grid.bpb_table()
    out = []
    for b in grid.budgets:
        vals = [cells[b] for cells in table.values() if b in cells]
        out.append((b, min(vals)))
    return out


def fit_loss_law(grid: RunGrid) -> PowerLawFit:
    pts = best_bpb_by_budget(grid)
    _need_budgets(pts)
    return fit_power_law(pts, "min", "bpb")


def fit_depth_law(grid: RunGrid, tie: TiePolicy = TiePolicy()) -> PowerLawFit:
    # exclude_budget still drops ties; every other mode averages depths
    depth_tie = tie if tie.mode == "exclude_budget" else TiePolicy("arithmetic_mean", tie.epsilon_bpb)
    pts = anchors(grid, depth_tie, "depth")
    _need_budgets(pts)
    return fit_power_law(pts, "min", "depth")


def prefix_fits(grid: RunGrid, tie: TiePolicy = TiePolicy()) -> list[tuple[int, PowerLawFit]]:
    """Size-law fits on the first k anchors, k = 3..K."""
    pts = anchors(grid, tie, "params")
    _need_budgets(pts, 3)
    return [(k, fit_power_law(pts[:k], "min", "Mparams")) for k in range(3, len(pts) + 1)]


def _tied_budgets(grid: RunGrid, epsilon: float) -> list[float]:
    return [b for b in grid.budgets if len(budget_optimum(grid, b, epsilon)[0]) > 1]


def sensitivity_suite(grid: RunGrid, epsilon: float = 0.0005) -> tuple[list[tuple[str, PowerLawFit]], list[str]]:
    """Refit the size law under the four standard anchor choices.

    Returns ``(variants, notices)``; a variant whose inputs are missing is
    skipped and explained in ``notices``.
    """
    notices = []
    variants = []
    budgets = grid.budgets
    last = budgets[-1]
    mean = TiePolicy("arithmetic_mean", epsilon)
    larger = TiePolicy("pick_larger", epsilon)
    tied = _tied_budgets(grid, epsilon)

    base = anchors(grid, mean)
    if len(base) >= 2:
        variants.append((f"{len(base)}-point (baseline)", fit_power_law(base, "min", "Mparams")))
    else:
        notices.append("baseline skipped: fewer than 2 anchors")

    no_last = [p for p in base if p[0] != last]
    if len(no_last) >= 2:
        variants.append((f"{len(no_last)}-point (exclude {_fmt_budget(last)})", fit_power_law(no_last, "min", "Mparams")))
    else:
        notices.append("exclude-last variant skipped: fewer than 2 anchors")

    if not tied:
        notices.append("tie variants skipped: no tied budget in grid")
        return variants, notices
    tb = tied[0]

    pts = [p for p in anchors(grid, larger) if p[0] != last]
    if len(pts) >= 2:
        value = dict(pts)[tb] if tb in dict(pts) else None
        variants.append(
            (f"{len(pts)}-point ({_fmt_budget(tb)} = {value:g}M)", fit_power_law(pts, "min", "Mparams"))
        )
    else:
        notices.append("pick-larger variant skipped: fewer than 2 anchors")

    pts = [p for p in base if p[0] not in (last, tb)]
    if len(pts) >= 2:
        variants.append((f"{len(pts)}-point (exclude {_fmt_budget(tb)})", fit_power_law(pts, "min", "Mparams")))
    else:
        notices.append("exclude-tie variant skipped: fewer than 2 anchors")
    return variants, notices


def _fmt_budget(minutes: float) -> str:
    if minutes >= 60 and minutes % 60 == 0:
        return f"{int(minutes // 60)}h"
    return f"{minutes:g}min"
