"""Per-budget optimum, overfitting flags, U-curve regimes, marginal returns, seed statistics."""

from __future__ import annotations

import enum
import itertools
import math
import statistics
from dataclasses import dataclass

from .domain import RunGrid
from .errors import InsufficientData, NotFound
from .powerlaw import TiePolicy, best_bpb_by_budget, budget_optimum

DEFAULT_EPSILON = 0.0005


class RegimeLabel(str, enum.Enum):
    COMPUTE_BOUNDED = "compute_bounded"
    TRANSITIONAL = "transitional"
    DATA_BOUNDED = "data_bounded"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class BudgetReport:
    budget_min: float
    optimum_models: tuple[str, ...]
    optimum_params_m: float | None
    optimum_bpb: float
    regime: RegimeLabel | None
    overfit_models: tuple[str, ...]

    def to_json(self) -> dict:
        return {
            "budget_min": self.budget_min,
            "optimum_models": list(self.optimum_models),
            "optimum_params_m": self.optimum_params_m,
            "optimum_bpb": self.optimum_bpb,
            "regime": None if self.regime is None else self.regime.value,
            "overfit_models": list(self.overfit_models),
        }


def optimum_at_budget(grid: RunGrid, budget: float, tie: TiePolicy = TiePolicy()):
    """``(tie set of model ids, tie-resolved params_m, best bpb)`` at one budget.

    Under ``exclude_budget`` a genuine tie resolves to ``params_m = None``.
    """
    if budget not in grid.budgets:
        raise NotFound(f"budget {budget} not in grid")
    tied, best = budget_optimum(grid, budget, tie.epsilon_bpb)
    params = tie.resolve([t[2] for t in tied])
    return tuple(t[0] for t in tied), params, best


def overfit_flags(grid: RunGrid, epsilon: float = DEFAULT_EPSILON) -> list[tuple[str, float, float]]:
    """Runs whose BPB is worse than the same model's best at any earlier budget.

    Returns ``(model_id, budget_min, delta_bpb)`` with the delta taken against
    the model's immediately preceding observed budget.
    """
    table = grid.bpb_table()
    flags = []
    for model_id, _, _ in grid.models():
        cells = sorted(table[model_id].items())
        best = math.inf
        prev = None
        for budget, bpb in cells:
            if bpb > best + epsilon:
                flags.append((model_id, budget, bpb - prev))
            best = min(best, bpb)
            prev = bpb
    return flags


def classify_regime(
    grid: RunGrid, budget: float, tie: TiePolicy = TiePolicy(), epsilon: float = DEFAULT_EPSILON
) -> RegimeLabel:
    """Label the U-curve at one budget.

    Only overfit flags on models strictly between the smallest observed
    model and the (smallest tied) optimum count: a flag on the smallest
    model sits at the edge of the sweep and says nothing about what shapes
    the limb next to the optimum. A curve that falls all the way to a
    unique optimum at the largest model is transitional unless such a flag
    is present.
    """
    if budget not in grid.budgets:
        raise NotFound(f"budget {budget} not in grid")
    table = grid.bpb_table()
    curve = [(m, table[m][budget]) for m, _, _ in grid.models() if budget in table[m]]
    if len(curve) < 3:
        raise InsufficientData(f"need at least 3 models at budget {budget}, got {len(curve)}")
    ids = [m for m, _ in curve]
    bpb = [v for _, v in curve]
    tied, _ = budget_optimum(grid, budget, tie.epsilon_bpb)
    tied_ids = {t[0] for t in tied}
    opt = min(ids.index(m) for m in tied_ids)

    flagged = {m for m, b, _ in overfit_flags(grid, epsilon) if b == budget}
    inner_flag = any(m in flagged for m in ids[1:opt])

    falls = all(bpb[i + 1] <= bpb[i] + tie.epsilon_bpb for i in range(len(bpb) - 1))
    if falls and tied_ids == {ids[-1]} and not inner_flag:
        return RegimeLabel.TRANSITIONAL
    return RegimeLabel.DATA_BOUNDED if inner_flag else RegimeLabel.COMPUTE_BOUNDED


def budget_reports(grid: RunGrid, tie: TiePolicy = TiePolicy(), epsilon: float = DEFAULT_EPSILON) -> list[BudgetReport]:
    flags = overfit_flags(grid, epsilon)
    out = []
    for b in grid.budgets:
        models, params, best = optimum_at_budget(grid, b, tie)
        try:
            regime = classify_regime(grid, b, tie, epsilon)
        except InsufficientData:
            regime = None
        over = tuple(m for m, fb, _ in flags if fb == b)
        out.append(BudgetReport(b, models, params, best, regime, over))
    return out


def marginal_returns(grid: RunGrid) -> list[tuple[tuple[float, float], float, float]]:
    """``((t1, t2), delta_bpb, bpb_per_hour)`` for consecutive budgets."""
    best = best_bpb_by_budget(grid)
    if len(best) < 2:
        raise InsufficientData("need at least 2 budgets")
    out = []
    for (t1, l1), (t2, l2) in zip(best, best[1:]):
        delta = l2 - l1
        out.append(((t1, t2), delta, delta / ((t2 - t1) / 60.0)))
    return out


@dataclass(frozen=True)
class SeedStats:
    model_id: str
    n: int
    mean: float
    std: float  # sample, n - 1
    std_population: float
    cv_pct: float
    cv_pct_population: float
    values: tuple[float, ...]


def multiseed_stats(grid: RunGrid):
    """Per-model seed statistics and the pairwise dominance matrix.

    ``dominance[(a, b)]`` is True iff every seed of ``a`` beats every seed
    of ``b``. Models with a single seed are skipped and named in the
    returned notices.
    """
    by_model: dict[str, list[float]] = {}
    for r in grid.records:
        by_model.setdefault(r.model_id, []).append(r.val_bpb)
    order = [m for m, _, _ in grid.models()]
    stats_out: dict[str, SeedStats] = {}
    notices = []
    for m in order:
        vals = by_model[m]
        if len(vals) < 2:
            notices.append(f"{m}: single seed, skipped")
            continue
        mean = statistics.fmean(vals)
        sd = statistics.stdev(vals)
        psd = statistics.pstdev(vals)
        stats_out[m] = SeedStats(m, len(vals), mean, sd, psd, sd / mean * 100, psd / mean * 100, tuple(vals))
    dominance = {
        (a, b): max(stats_out[a].values) < min(stats_out[b].values)
        for a, b in itertools.permutations(stats_out, 2)
    }
    return stats_out, dominance, notices
