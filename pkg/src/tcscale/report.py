"""Aggregate every analysis of a grid into one bundle, plus its JSON/CSV/SVG renderings.

When the grid is the embedded reference dataset the bundle also compares
computed values against the published reference constants and emits a
discrepancy note for each divergence beyond tolerance.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field

from . import hardware, planner, svg
from .budget import BudgetReport, budget_reports, marginal_returns, multiseed_stats, overfit_flags
from .domain import PowerLawFit, RunGrid
from .errors import InsufficientData, InvalidArgument
from .powerlaw import (
    TiePolicy,
    bootstrap_ci,
    fit_depth_law,
    fit_loss_law,
    fit_optimal_size_law,
    prefix_fits,
    sensitivity_suite,
)

SCHEMA_VERSION = 1
CHINCHILLA_ALPHA = 0.50
TIME_ALPHA = 0.60  # rounded exponent used for the published comparison table
MULTIPLIERS = (2.0, 4.0, 10.0, 24.0)

# Published values the embedded grid is checked against: value, tolerance.
REFERENCE = {
    "size_alpha": (0.595, 0.02),
    "size_coeff": (14.20, 1.0),
    "size_ci95": (0.53, 0.67),
    "loss_alpha": (-0.061, 0.005),
    "loss_coeff": (1.223, 0.05),
    "depth_alpha": (0.231, 0.01),
    "prefix_5": (0.44, 0.05),
    "prefix_7": (0.75, 0.05),
    "ratio_24x": (7.22, 0.01),
    "seed_std": ({"D8": 0.001, "D10": 0.000, "D14": 0.003, "D16": 0.003}, 0.0005),
}
HARDWARE_REFERENCE = {
    "beta": (0.8, 0.03),
    "tokens_d24_5min": (13e6, 0.5e6),
    "epochs_d8_12h_min": 250.0,
    "epochs_d26_24h_max": 3.0,
}
REGIME_REFERENCE = {240.0: "compute_bounded", 720.0: "transitional", 1440.0: "data_bounded"}


def _clean(obj):
    """JSON-safe copy: non-finite floats become null, tuples become lists."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


@dataclass
class ReportBundle:
    fits: dict[str, PowerLawFit]
    anchors: list[tuple[float, float]]
    best_bpb: list[tuple[float, float]]
    budget_reports: list[BudgetReport]
    overfit: list[tuple[str, float, float]]
    marginal: list
    sensitivity: list[tuple[str, PowerLawFit]]
    alpha_evolution: list[tuple[int, PowerLawFit]]
    comparison: list[dict]
    discrepancy_notes: list[str]
    notices: list[str] = field(default_factory=list)
    bootstrap_ci95: tuple[float, float] | None = None
    multiseed: dict | None = None
    hardware: dict | None = None
    tie_mode: str = "arithmetic_mean"

    def to_json(self) -> dict:
        return _clean({
            "schema_version": SCHEMA_VERSION,
            "tie_mode": self.tie_mode,
            "fits": {k: f.to_json() for k, f in self.fits.items()},
            "size_law_bootstrap_ci95": self.bootstrap_ci95,
            "anchors": [{"budget_min": b, "params_m": p} for b, p in self.anchors],
            "budget_reports": [r.to_json() for r in self.budget_reports],
            "overfit_flags": [{"model_id": m, "budget_min": b, "delta_bpb": d} for m, b, d in self.overfit],
            "marginal_returns": [
                {"from_min": t1, "to_min": t2, "delta_bpb": d, "bpb_per_hour": r} for (t1, t2), d, r in self.marginal
            ],
            "sensitivity": [{"variant": lab, "fit": f.to_json()} for lab, f in self.sensitivity],
            "alpha_evolution": [{"k": k, "fit": f.to_json()} for k, f in self.alpha_evolution],
            "comparison": self.comparison,
            "multiseed": self.multiseed,
            "hardware": self.hardware,
            "notices": self.notices,
            "discrepancy_notes": self.discrepancy_notes,
        })

    def to_csv(self) -> str:
        """One row per budget: optimum, regime, flags and the step from the previous budget."""
        steps = {t2: (d, r) for (_, t2), d, r in self.marginal}
        best = dict(self.best_bpb)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["budget_min", "optimum_models", "optimum_params_m", "optimum_bpb", "best_bpb",
                    "regime", "overfit_models", "delta_bpb", "bpb_per_hour"])
        for r in self.budget_reports:
            d, rate = steps.get(r.budget_min, (None, None))
            w.writerow([
                repr(r.budget_min),
                ";".join(r.optimum_models),
                "" if r.optimum_params_m is None else repr(r.optimum_params_m),
                repr(r.optimum_bpb),
                repr(best[r.budget_min]),
                "" if r.regime is None else r.regime.value,
                ";".join(r.overfit_models),
                "" if d is None else repr(d),
                "" if rate is None else repr(rate),
            ])
        return buf.getvalue()


def _fmt(b):
    return f"{b / 60:g}h" if b >= 60 else f"{b:g}min"


def comparison_table(alpha: float | None) -> list[dict]:
    rows = []
    for m in MULTIPLIERS:
        row = {
            "time_multiplier": m,
            "ratio_alpha_0.60": planner.scaling_ratio(m, TIME_ALPHA),
            "ratio_chinchilla": planner.scaling_ratio(m, CHINCHILLA_ALPHA),
        }
        if alpha is not None:
            row["ratio_fitted_alpha"] = planner.scaling_ratio(m, alpha)
        rows.append(row)
    return rows


def _grid_notes(b: ReportBundle) -> list[str]:
    notes = []
    size = b.fits.get("size_law")
    if size is not None:
        a_ref, tol = REFERENCE["size_alpha"]
        if abs(size.exponent_alpha - a_ref) > tol:
            notes.append(f"size law: fitted alpha {size.exponent_alpha:.4f} vs published {a_ref} (tolerance {tol})")
        c_ref, tol = REFERENCE["size_coeff"]
        if abs(size.coeff_a - c_ref) > tol:
            notes.append(f"size law: fitted coefficient {size.coeff_a:.3f} vs published {c_ref}")
        lo, hi = REFERENCE["size_ci95"]
        if size.ci95_low <= CHINCHILLA_ALPHA <= size.ci95_high:
            notes.append(
                f"size law: 95% CI [{size.ci95_low:.4f}, {size.ci95_high:.4f}] includes {CHINCHILLA_ALPHA:.2f}; "
                f"published CI [{lo}, {hi}] excludes it"
            )
    loss = b.fits.get("loss_law")
    if loss is not None:
        a_ref, tol = REFERENCE["loss_alpha"]
        if abs(loss.exponent_alpha - a_ref) > tol:
            notes.append(f"loss law: fitted alpha {loss.exponent_alpha:.4f} vs published {a_ref}")
        c_ref, tol = REFERENCE["loss_coeff"]
        if abs(loss.coeff_a - c_ref) > tol:
            notes.append(f"loss law: fitted coefficient {loss.coeff_a:.4f} vs published {c_ref}")
    depth = b.fits.get("depth_law")
    if depth is not None:
        a_ref, tol = REFERENCE["depth_alpha"]
        if abs(depth.exponent_alpha - a_ref) > tol:
            notes.append(f"depth law: fitted alpha {depth.exponent_alpha:.4f} vs published {a_ref}")
    prefix = dict(b.alpha_evolution)
    for k in (5, 7):
        a_ref, tol = REFERENCE[f"prefix_{k}"]
        if k in prefix and abs(prefix[k].exponent_alpha - a_ref) > tol:
            notes.append(f"alpha evolution: {k}-point alpha {prefix[k].exponent_alpha:.4f} vs published {a_ref}")
    for r in b.budget_reports:
        expected = REGIME_REFERENCE.get(r.budget_min)
        got = None if r.regime is None else r.regime.value
        if expected is not None and got != expected:
            notes.append(f"regime at {_fmt(r.budget_min)}: computed {got} vs published {expected}")
        elif expected is None and got == "data_bounded":
            notes.append(
                f"regime at {_fmt(r.budget_min)}: computed data_bounded (overfit flags on "
                f"{', '.join(r.overfit_models)}); the published table marks no data-bounded curve there"
            )
    ratio_ref, tol = REFERENCE["ratio_24x"]
    computed = planner.scaling_ratio(24.0, TIME_ALPHA)
    if abs(computed - ratio_ref) > tol:
        notes.append(f"comparison: 24x time gives {computed:.2f}x model at alpha 0.60, published table prints {ratio_ref}x")
    if b.multiseed is not None:
        printed, tol = REFERENCE["seed_std"]
        for m, s in b.multiseed["stats"].items():
            if m in printed and abs(s["std"] - printed[m]) > tol:
                notes.append(f"multi-seed: {m} sample std {s['std']:.6f} vs published {printed[m]:.3f}")
    return notes


def _hardware_section(profile: hardware.HardwareProfile, dataset_tokens) -> tuple[dict, list[str]]:
    fitted = hardware.fit_throughput(profile)
    section = {
        "profile": fitted.name,
        "fit": {"c": fitted.fitted_c, "beta": fitted.fitted_beta, "r2": fitted.fitted_r2},
        "compute_exponent": hardware.compute_scaling_exponent(fitted),
    }
    notes = []
    if fitted.name == "rtx4090":
        beta_ref, tol = HARDWARE_REFERENCE["beta"]
        if abs(fitted.fitted_beta - beta_ref) > tol:
            notes.append(
                f"throughput: fitted beta {fitted.fitted_beta:.4f} vs published {beta_ref}; compute exponent "
                f"{1 - fitted.fitted_beta:.4f} vs published {1 - beta_ref:.1f}"
            )
        tok_ref, tol = HARDWARE_REFERENCE["tokens_d24_5min"]
        tok = hardware.tokens_processed(fitted, 855.6, 5.0)
        section["tokens_d24_5min"] = tok
        if abs(tok - tok_ref) > tol:
            notes.append(f"throughput: D24 processes {tok / 1e6:.1f}M tokens in 5min vs published {tok_ref / 1e6:g}M")
        if dataset_tokens:
            e8 = hardware.epochs(fitted, 50.3, 720.0, dataset_tokens)
            e26 = hardware.epochs(fitted, 1031.0, 1440.0, dataset_tokens)
            section["epochs_d8_12h"] = e8
            section["epochs_d26_24h"] = e26
            notes.append(f"epochs: D8 at 12h sees {e8:.0f} epochs vs published 250+")
            if e26 >= HARDWARE_REFERENCE["epochs_d26_24h_max"]:
                notes.append(f"epochs: D26 at 24h sees {e26:.1f} epochs vs published <3")
    return section, notes


def build_report(
    grid: RunGrid,
    tie: TiePolicy = TiePolicy(),
    profile: hardware.HardwareProfile | None = None,
    seed: int = 0,
    resamples: int = 2000,
    reference: bool = False,
    multiseed: RunGrid | None = None,
) -> ReportBundle:
    """Run every analysis on ``grid``.

    Pieces that need more data than the grid has (bootstrap, prefix fits,
    regimes) are skipped with a notice; failure of the core size or loss
    fit propagates.
    """
    notices = []
    size, anchors = fit_optimal_size_law(grid, tie)
    loss = fit_loss_law(grid)
    fits = {"size_law": size, "loss_law": loss}
    try:
        fits["depth_law"] = fit_depth_law(grid, tie)
    except InsufficientData as e:
        notices.append(f"depth law skipped: {e}")

    boot = None
    try:
        boot = bootstrap_ci(anchors, resamples=resamples, seed=seed)
    except InvalidArgument as e:
        notices.append(f"bootstrap skipped: {e}")
    try:
        prefixes = prefix_fits(grid, tie)
    except InsufficientData as e:
        prefixes = []
        notices.append(f"alpha evolution skipped: {e}")
    sens, sens_notes = sensitivity_suite(grid, tie.epsilon_bpb)
    notices.extend(sens_notes)

    reports = budget_reports(grid, tie)
    for r in reports:
        if r.regime is None:
            notices.append(f"regime at {_fmt(r.budget_min)} skipped: fewer than 3 models")
    try:
        marginal = marginal_returns(grid)
    except InsufficientData:
        marginal = []

    bundle = ReportBundle(
        fits=fits,
        anchors=anchors,
        best_bpb=[(b, v) for b, v in sorted({r.budget_min: r.optimum_bpb for r in reports}.items())],
        budget_reports=reports,
        overfit=overfit_flags(grid),
        marginal=marginal,
        sensitivity=sens,
        alpha_evolution=prefixes,
        comparison=comparison_table(size.exponent_alpha),
        discrepancy_notes=[],
        notices=notices,
        bootstrap_ci95=boot,
        tie_mode=tie.mode,
    )

    if multiseed is not None:
        stats, dom, ms_notes = multiseed_stats(multiseed)
        bundle.multiseed = {
            "budget_min": multiseed.budgets[0] if len(multiseed.budgets) == 1 else None,
            "stats": {
                m: {"n": s.n, "mean": s.mean, "std": s.std, "std_population": s.std_population,
                    "cv_pct": s.cv_pct, "cv_pct_population": s.cv_pct_population, "values": s.values}
                for m, s in stats.items()
            },
            "dominance": [{"better": a, "worse": b} for (a, b), v in sorted(dom.items()) if v],
        }
        notices.extend(ms_notes)

    if profile is not None:
        bundle.hardware, hw_notes = _hardware_section(profile, grid.dataset_tokens)
        bundle.discrepancy_notes.extend(hw_notes)
    if reference:
        bundle.discrepancy_notes[:0] = _grid_notes(bundle)
    return bundle


def write_bundle(bundle: ReportBundle, grid: RunGrid, out_dir: str, tie: TiePolicy = TiePolicy(), plots: bool = True) -> list[str]:
    """Write report.json, report.csv and (optionally) the four SVGs; returns the paths written."""
    os.makedirs(out_dir, exist_ok=True)
    files = {
        "report.json": json.dumps(bundle.to_json(), indent=2) + "\n",
        "report.csv": bundle.to_csv(),
    }
    if plots:
        files["u_curves.svg"] = svg.u_curves(grid)
        files["size_law.svg"] = svg.size_law(bundle.anchors, bundle.fits["size_law"], CHINCHILLA_ALPHA)
        files["loss_law.svg"] = svg.loss_law(bundle.best_bpb, bundle.fits["loss_law"])
        files["heatmap.svg"] = svg.heatmap(grid, tie)
    paths = []
    for name, text in files.items():
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        paths.append(path)
    return paths
