"""Model-size recommendations for a wall-clock budget."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from . import hardware
from .domain import ModelConfig, PowerLawFit, RunGrid
from .errors import InvalidArgument
from .powerlaw import TiePolicy, evaluate

CHINCHILLA_ALPHA = 0.50


@dataclass(frozen=True)
class PlanRecommendation:
    budget_min: float
    n_star_continuous_m: float
    snapped_depth: int
    snapped_params_m: float
    expected_bpb: float
    tokens: float
    epochs: float | None
    flops: float
    chinchilla_n_m: float
    notes: tuple[str, ...] = ()
    measured_models: tuple[str, ...] | None = None
    measured_bpb: float | None = None

    def to_json(self) -> dict:
        d = {
            "budget_min": self.budget_min,
            "n_star_continuous_m": self.n_star_continuous_m,
            "snapped_depth": self.snapped_depth,
            "snapped_params_m": self.snapped_params_m,
            "expected_bpb": self.expected_bpb,
            "tokens": self.tokens,
            "epochs": self.epochs,
            "flops": self.flops,
            "chinchilla_n_m": self.chinchilla_n_m,
            "notes": list(self.notes),
        }
        if self.measured_models is not None:
            d["measured_models"] = list(self.measured_models)
            d["measured_bpb"] = self.measured_bpb
        return d


def snap(configs: Sequence[ModelConfig], params_m: float) -> ModelConfig:
    """Config nearest in log-params; ties go to the smaller model."""
    if not configs:
        raise InvalidArgument("config table is empty")
    target = math.log(params_m)
    return min(configs, key=lambda c: (abs(math.log(c.params_m) - target), c.params_m))


def scaling_ratio(multiplier: float, alpha: float) -> float:
    """Model-size multiplier prescribed by a time multiplier under exponent ``alpha``."""
    if not multiplier > 0:
        raise InvalidArgument("multiplier must be positive")
    return multiplier**alpha


def recommend(
    budget_min: float,
    size_law: PowerLawFit,
    loss_law: PowerLawFit,
    configs: Sequence[ModelConfig],
    profile: hardware.HardwareProfile,
    dataset_tokens: int | None = None,
) -> PlanRecommendation:
    if not configs:
        raise InvalidArgument("config table is empty")
    if not budget_min > 0:
        raise InvalidArgument("budget must be positive")
    notes = []
    n_star = evaluate(size_law, budget_min)
    cfg = snap(configs, n_star)
    expected = evaluate(loss_law, budget_min)

    lo, hi = size_law.x_min, size_law.x_max
    if lo is not None and not 0.5 * lo < budget_min < 2.0 * hi:
        notes.append(f"extrapolation: budget {budget_min:g} min is outside 0.5x-2x of the fitted range [{lo:g}, {hi:g}] min")

    tps = hardware.throughput_at(profile, cfg.params_m)
    if not hardware.in_measured_range(profile, cfg.params_m):
        notes.append(f"throughput for {cfg.params_m:g}M extrapolated from the fitted law")
    tokens = tps * budget_min * 60.0
    ep = tokens / dataset_tokens if dataset_tokens else None
    fl = hardware.FLOPS_PER_PARAM_TOKEN * cfg.params_m * 1e6 * tokens

    if cfg.params_m == max(c.params_m for c in configs):
        vram = f" ({profile.vram_gb:g} GB)" if profile.vram_gb else ""
        notes.append(f"largest available config; the law may call for a model beyond single-GPU VRAM{vram}")
    if not cfg.params_exact:
        notes.append(f"D{cfg.depth} parameter count is approximate")

    t0 = lo if lo is not None else budget_min
    chin = evaluate(size_law, t0) * (budget_min / t0) ** CHINCHILLA_ALPHA
    return PlanRecommendation(
        budget_min=budget_min,
        n_star_continuous_m=n_star,
        snapped_depth=cfg.depth,
        snapped_params_m=cfg.params_m,
        expected_bpb=expected,
        tokens=tokens,
        epochs=ep,
        flops=fl,
        chinchilla_n_m=chin,
        notes=tuple(notes),
    )


def guidelines_table(
    size_law: PowerLawFit,
    loss_law: PowerLawFit,
    configs: Sequence[ModelConfig],
    profile: hardware.HardwareProfile,
    budgets: Sequence[float],
    grid: RunGrid | None = None,
    dataset_tokens: int | None = None,
    tie: TiePolicy = TiePolicy(),
) -> list[PlanRecommendation]:
    """One recommendation per budget, with measured optima alongside when a grid is given."""
    from .budget import optimum_at_budget

    rows = []
    for b in budgets:
        rec = recommend(b, size_law, loss_law, configs, profile, dataset_tokens)
        if grid is not None and b in grid.budgets:
            models, _, bpb = optimum_at_budget(grid, b, tie)
            rec = PlanRecommendation(**{**rec.__dict__, "measured_models": models, "measured_bpb": bpb})
        rows.append(rec)
    return rows
