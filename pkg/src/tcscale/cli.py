"""tcscale command line: analyze, fit, plan, simulate, report.

Exit codes: 0 success, 2 input error, 3 computation error.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys

from . import hardware, planner, report, sim
from . import reference_data as ref
from .errors import DomainError, EmptyInput, InsufficientData, InvalidArgument, SingularFit, TcscaleError, UnfittedProfile
from .ingest import load_reference_dataset, parse_hardware_profile, parse_runs, serialize_runs
from .powerlaw import TiePolicy, bootstrap_ci, fit_depth_law, fit_loss_law, fit_optimal_size_law

EXIT_OK, EXIT_INPUT, EXIT_COMPUTE = 0, 2, 3

TIE_FLAGS = {"mean": "arithmetic_mean", "larger": "pick_larger", "smaller": "pick_smaller", "exclude": "exclude_budget"}
GLOBAL_DEFAULTS = dict(input="embedded", output_dir="out", format="json", tie="mean", seed=0, hardware="rtx4090", json=False)


class InputError(Exception):
    """Bad user input; mapped to exit code 2."""


def parse_budget(text: str) -> float:
    """``"30m"``, ``"30min"``, ``"4h"``, ``"1.5h"`` or bare minutes ``"1440"``."""
    m = re.fullmatch(r"\s*(\d+(?:\.\d+)?)\s*(m|min|h|hr)?\s*", text or "")
    if not m:
        raise InputError(f"malformed budget {text!r}; use e.g. 30m, 4h or 1440")
    v = float(m.group(1)) * (60.0 if m.group(2) in ("h", "hr") else 1.0)
    if not v > 0:
        raise InputError(f"budget must be positive, got {text!r}")
    return v


def parse_budget_list(text: str) -> list[float]:
    items = [s for s in (text or "").split(",") if s.strip()]
    if not items:
        raise InputError("empty budget list")
    return sorted({parse_budget(s) for s in items})


def _read_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None


def load_grid(args):
    """``(grid, is_reference)`` from ``--input``."""
    if args.input == "embedded":
        return load_reference_dataset().grid, True
    text = _read_text(args.input)
    fmt = "json" if args.input.endswith(".json") or text.lstrip().startswith("{") else "csv"
    try:
        grid, issues = parse_runs(text, fmt)
    except EmptyInput as e:
        raise InputError(str(e)) from None
    for issue in issues:
        print(str(issue), file=sys.stderr)
    if grid is None:
        raise InputError(f"{args.input}: {sum(i.severity == 'error' for i in issues)} error(s), no grid loaded")
    return grid, False


def load_profile(name: str) -> hardware.HardwareProfile:
    if name == "rtx4090":
        return hardware.rtx4090_profile()
    try:
        return parse_hardware_profile(_read_text(name))
    except (InvalidArgument, InsufficientData) as e:
        raise InputError(f"hardware profile {name}: {e}") from None


def _tie(args) -> TiePolicy:
    return TiePolicy(TIE_FLAGS[args.tie])


def _emit(text: str, path: str | None = None):
    if path:
        d = os.path.dirname(path)
        if d:
            os.makedirs(d, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _dumps(obj) -> str:
    return json.dumps(report._clean(obj), indent=2) + "\n"


# --- commands ---------------------------------------------------------------


def cmd_analyze(args) -> int:
    grid, is_ref = load_grid(args)
    tie = _tie(args)
    profile = load_profile(args.hardware)
    bundle = report.build_report(
        grid, tie, profile, seed=args.seed, resamples=args.resamples,
        reference=is_ref, multiseed=load_reference_dataset().multiseed if is_ref else None,
    )
    paths = report.write_bundle(bundle, grid, args.output_dir, tie)
    if args.json:
        sys.stdout.write(_dumps(bundle.to_json()))
    else:
        for r in bundle.budget_reports:
            regime = r.regime.value if r.regime else "-"
            print(f"{r.budget_min:>7g} min  {'/'.join(r.optimum_models):<8} {r.optimum_bpb:.3f}  {regime}")
        s = bundle.fits["size_law"]
        print(f"size law: N* = {s.coeff_a:.3f} * t^{s.exponent_alpha:.4f}  (R2 {s.r2:.3f})")
        for note in bundle.discrepancy_notes:
            print(f"note: {note}")
        for p in paths:
            print(f"wrote {p}")
    return EXIT_OK


def _fit_rows(grid, tie, profile, seed, resamples):
    size, anchors = fit_optimal_size_law(grid, tie)
    fits = {"size_law": size.to_json(), "loss_law": fit_loss_law(grid).to_json()}
    try:
        fits["depth_law"] = fit_depth_law(grid, tie).to_json()
    except InsufficientData:
        pass
    try:
        fits["size_law"]["bootstrap_ci95"] = list(bootstrap_ci(anchors, resamples, seed))
    except InvalidArgument:
        pass
    if profile is not None:
        p = hardware.fit_throughput(profile)
        fits["throughput"] = {"profile": p.name, "c": p.fitted_c, "beta": p.fitted_beta, "r2": p.fitted_r2}
    return fits


def cmd_fit(args) -> int:
    grid, _ = load_grid(args)
    fits = _fit_rows(grid, _tie(args), load_profile(args.hardware), args.seed, args.resamples)
    if args.format == "csv":
        lines = ["law,coeff_a,exponent_alpha,r2,stderr_alpha,ci95_low,ci95_high,n_points"]
        for name in ("size_law", "loss_law", "depth_law"):
            if name in fits:
                f = fits[name]
                lo, hi = f["ci95"] if f["ci95"] is not None else (None, None)
                vals = [f["coeff_a"], f["exponent_alpha"], f["r2"], f["stderr_alpha"], lo, hi, f["n_points"]]
                lines.append(",".join([name] + ["" if v is None else repr(v) for v in vals]))
        text = "\n".join(lines) + "\n"
    else:
        text = _dumps({"schema_version": report.SCHEMA_VERSION, "fits": fits})
    _emit(text, os.path.join(args.output_dir, f"fits.{args.format}") if args.save else None)
    if args.save:
        print(f"wrote {os.path.join(args.output_dir, f'fits.{args.format}')}")
    return EXIT_OK


def cmd_plan(args) -> int:
    budgets = parse_budget_list(args.budget)
    grid, is_ref = load_grid(args)
    tie = _tie(args)
    profile = hardware.fit_throughput(load_profile(args.hardware))
    size, _ = fit_optimal_size_law(grid, tie)
    loss = fit_loss_law(grid)
    configs = load_reference_dataset().configs
    dataset_tokens = grid.dataset_tokens or (ref.DATASET_TOKENS if is_ref else None)
    rows = planner.guidelines_table(size, loss, configs, profile, budgets, grid=grid,
                                    dataset_tokens=dataset_tokens, tie=tie)
    if args.json:
        sys.stdout.write(_dumps({"schema_version": report.SCHEMA_VERSION, "recommendations": [r.to_json() for r in rows]}))
        return EXIT_OK
    print(f"{'budget':>8} {'N* (M)':>8} {'model':>6} {'params':>8} {'law BPB':>8} {'measured':>12} {'tokens':>9} {'epochs':>7}")
    for r in rows:
        measured = ""
        if r.measured_models is not None:
            measured = f"{'/'.join(r.measured_models)} {r.measured_bpb:.3f}"
        ep = "-" if r.epochs is None else f"{r.epochs:.1f}"
        print(f"{report._fmt(r.budget_min):>8} {r.n_star_continuous_m:>8.1f} {'D' + str(r.snapped_depth):>6} "
              f"{r.snapped_params_m:>8g} {r.expected_bpb:>8.3f} {measured:>12} {r.tokens / 1e6:>8.1f}M {ep:>7}")
        for note in r.notes:
            print(f"         note: {note}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    profile = load_profile(args.hardware)
    budgets = parse_budget_list(args.budgets) if args.budgets is not None else list(ref.BUDGETS_MIN)
    configs = load_reference_dataset().configs

    if args.calibrate:
        if args.calibrate == "embedded":
            target = load_reference_dataset().grid
        else:
            target, _ = load_grid(argparse.Namespace(input=args.calibrate))
        start = _load_params(args.params) if args.params else sim.initial_params()
        cal = sim.calibrate(start, target, profile, max_iters=args.max_iters, seed=args.seed)
        path = os.path.join(args.output_dir, "sim_params.json")
        _emit(_dumps(cal.params.to_json()), path)
        info = {"rmse": cal.rmse, "initial_rmse": cal.initial_rmse, "converged": cal.converged,
                "iterations": cal.iterations, "notes": list(cal.notes), "params_path": path}
        if args.json:
            sys.stdout.write(_dumps(info))
        else:
            print(f"calibrated rmse {cal.rmse:.6f} (initial {cal.initial_rmse:.6f}, {cal.iterations} iterations)")
            for n in cal.notes:
                print(f"note: {n}")
            print(f"wrote {path}")
        return EXIT_OK

    params = _load_params(args.params) if args.params else sim.default_params()
    result = sim.sweep(params, profile, budgets, configs)
    out = args.out or os.path.join(args.output_dir, f"sim_grid.{args.format}")
    _emit(serialize_runs(result.grid, args.format), None if out == "-" else out)
    if out != "-":
        print(f"wrote {out}")
    return EXIT_OK


def _load_params(path: str) -> sim.SimParams:
    try:
        return sim.SimParams.from_json(json.loads(_read_text(path)))
    except (json.JSONDecodeError, TypeError, InvalidArgument) as e:
        raise InputError(f"sim params {path}: {e}") from None


def cmd_report(args) -> int:
    """Tables only, in one format, to stdout or ``--output-dir``."""
    grid, is_ref = load_grid(args)
    tie = _tie(args)
    bundle = report.build_report(
        grid, tie, load_profile(args.hardware), seed=args.seed, resamples=args.resamples,
        reference=is_ref, multiseed=load_reference_dataset().multiseed if is_ref else None,
    )
    text = _dumps(bundle.to_json()) if args.format == "json" else bundle.to_csv()
    if args.save:
        path = os.path.join(args.output_dir, f"report.{args.format}")
        _emit(text, path)
        print(f"wrote {path}")
    else:
        _emit(text)
    return EXIT_OK


# --- parser -----------------------------------------------------------------


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    kw = dict(default=argparse.SUPPRESS) if suppress else {}
    g = p.add_argument_group("global options")
    g.add_argument("--input", help='run grid CSV/JSON, or "embedded" (default)', **kw)
    g.add_argument("--output-dir", help="directory for written files (default: out)", **kw)
    g.add_argument("--format", choices=("json", "csv"), **kw)
    g.add_argument("--tie", choices=tuple(TIE_FLAGS), help="tie resolution for optimal-size anchors", **kw)
    g.add_argument("--seed", type=int, **kw)
    g.add_argument("--hardware", help='"rtx4090" or a hardware profile JSON path', **kw)
    g.add_argument("--json", action="store_true", help="machine-readable stdout", **kw)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags(True)
    parser = argparse.ArgumentParser(prog="tcscale", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="full report, CSV/JSON tables and SVG plots")
    p.add_argument("--resamples", type=int, default=2000, help="bootstrap resamples for the size-law CI")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("fit", parents=[common], help="size, loss, depth and throughput laws")
    p.add_argument("--resamples", type=int, default=2000)
    p.add_argument("--save", action="store_true", help="write fits.<format> to --output-dir instead of stdout")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("plan", parents=[common], help="recommend a model size for a wall-clock budget")
    p.add_argument("--budget", required=True, help='budget(s), e.g. "8h" or "30m,4h,1440"')
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", parents=[common], help="simulated BPB grid, or calibrate the simulator")
    p.add_argument("--params", help="SimParams JSON (default: shipped defaults)")
    p.add_argument("--budgets", help='comma-separated budgets (default: the reference eight)')
    p.add_argument("--out", help='grid output path, "-" for stdout (default: <output-dir>/sim_grid.<format>)')
    p.add_argument("--calibrate", metavar="GRID", help='fit params to "embedded" or a grid file instead of sweeping')
    p.add_argument("--max-iters", type=int, default=20_000)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", parents=[common], help="report tables in one format")
    p.add_argument("--resamples", type=int, default=2000)
    p.add_argument("--save", action="store_true", help="write report.<format> to --output-dir instead of stdout")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    for k, v in GLOBAL_DEFAULTS.items():
        if not hasattr(args, k):
            setattr(args, k, v)
    if args.tie not in TIE_FLAGS:
        parser.print_usage(sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_INPUT
    except (InsufficientData, SingularFit, DomainError, UnfittedProfile) as e:
        print(f"computation error: {e}", file=sys.stderr)
        return EXIT_COMPUTE
    except InvalidArgument as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except TcscaleError as e:
        print(f"computation error: {e}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
