"""Run-log and hardware-profile parsing, plus the embedded reference dataset."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass
from typing import NamedTuple, TextIO

from . import reference_data as ref
from .domain import ModelConfig, RunGrid, RunRecord, validate_config_table
from .errors import EmptyInput, InsufficientData, InvalidArgument

log = logging.getLogger(__name__)

CSV_FIELDS = ("model_id", "depth", "params_m", "budget_min", "val_bpb", "seed", "tokens_per_sec")
REQUIRED_FIELDS = CSV_FIELDS[:5]


@dataclass(frozen=True)
class IngestIssue:
    severity: str  # "warning" | "error"
    row: int | None
    message: str

    def __str__(self):
        where = f"row {self.row}: " if self.row is not None else ""
        return f"{self.severity}: {where}{self.message}"


class ReferenceDataset(NamedTuple):
    grid: RunGrid
    configs: list[ModelConfig]
    multiseed: RunGrid
    dataset_tokens: int


def _read(text: str | TextIO) -> str:
    if isinstance(text, str):
        return text
    data = text.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data


def _opt(value, conv):
    if value is None:
        return None
    if isinstance(value, str):
        value = value.strip()
        if value == "":
            return None
    return conv(value)


def _as_int(value) -> int:
    if isinstance(value, bool):
        raise ValueError("boolean is not an integer")
    if isinstance(value, float):
        if not value.is_integer():
            raise ValueError(f"{value} is not an integer")
        return int(value)
    return int(value)


def _record_from_mapping(row: dict) -> RunRecord:
    missing = [f for f in REQUIRED_FIELDS if row.get(f) in (None, "")]
    if missing:
        raise ValueError(f"missing field(s): {', '.join(missing)}")
    return RunRecord(
        model_id=str(row["model_id"]).strip(),
        depth=_as_int(row["depth"]),
        params_m=float(row["params_m"]),
        budget_min=float(row["budget_min"]),
        val_bpb=float(row["val_bpb"]),
        seed=_opt(row.get("seed"), _as_int),
        architecture=(_opt(row.get("architecture"), str) or "dense"),
        tokens_per_sec=_opt(row.get("tokens_per_sec"), float),
    )


def parse_runs(text: str | TextIO, format: str = "csv") -> tuple[RunGrid | None, list[IngestIssue]]:
    """Parse run logs into a grid.

    Malformed rows become error issues rather than exceptions. When any
    error issue is present the grid is withheld (``None``) and the caller
    gets the full issue list. An input with no valid rows at all raises
    :class:`EmptyInput`.
    """
    body = _read(text)
    issues: list[IngestIssue] = []
    dataset_tokens = None
    rows: list[tuple[int, dict]] = []

    if format == "csv":
        if not body.strip():
            raise EmptyInput("no rows in input")
        reader = csv.DictReader(io.StringIO(body))
        header = reader.fieldnames or []
        absent = [f for f in REQUIRED_FIELDS if f not in header]
        if absent:
            raise EmptyInput(f"CSV header lacks required column(s): {', '.join(absent)}")
        for i, row in enumerate(reader, start=1):
            if None in row:
                issues.append(IngestIssue("error", i, "too many fields"))
                continue
            if not any((v or "").strip() for v in row.values()):
                continue
            rows.append((i, row))
    elif format == "json":
        if not body.strip():
            raise EmptyInput("no rows in input")
        try:
            doc = json.loads(body)
        except json.JSONDecodeError as e:
            raise EmptyInput(f"invalid JSON: {e}") from None
        if not isinstance(doc, dict) or not isinstance(doc.get("runs"), list):
            raise EmptyInput('JSON input must be an object with a "runs" array')
        if doc.get("dataset_tokens") is not None:
            try:
                dataset_tokens = _as_int(doc["dataset_tokens"])
                if dataset_tokens <= 0:
                    raise ValueError("must be positive")
            except (TypeError, ValueError) as e:
                issues.append(IngestIssue("error", None, f"dataset_tokens: {e}"))
        for i, row in enumerate(doc["runs"], start=1):
            if not isinstance(row, dict):
                issues.append(IngestIssue("error", i, "run entry is not an object"))
                continue
            rows.append((i, row))
    else:
        raise InvalidArgument(f"unknown format {format!r}")

    records: list[RunRecord] = []
    seen: dict[tuple, int] = {}
    params_by_depth: dict[int, tuple[float, int]] = {}
    for i, row in rows:
        try:
            rec = _record_from_mapping(row)
        except (TypeError, ValueError) as e:
            issues.append(IngestIssue("error", i, str(e)))
            continue
        if rec.key in seen:
            issues.append(IngestIssue("error", i, f"duplicate run {rec.key} (first at row {seen[rec.key]})"))
            continue
        prev = params_by_depth.get(rec.depth)
        if prev is not None and prev[0] != rec.params_m:
            issues.append(
                IngestIssue("error", i, f"depth {rec.depth} has params_m {rec.params_m}, row {prev[1]} says {prev[0]}")
            )
            continue
        seen[rec.key] = i
        params_by_depth.setdefault(rec.depth, (rec.params_m, i))
        records.append(rec)

    if not records and not any(s.severity == "error" for s in issues):
        raise EmptyInput("no valid rows in input")
    if not records:
        issues.append(IngestIssue("error", None, "no valid rows in input"))
    if any(s.severity == "error" for s in issues):
        return None, issues
    return RunGrid(tuple(records), dataset_tokens), issues


def serialize_runs(grid: RunGrid, format: str = "csv") -> str:
    """Inverse of :func:`parse_runs`; floats are written with ``repr`` so nothing is lost."""

    def fmt(v):
        return "" if v is None else repr(v) if isinstance(v, float) else str(v)

    if format == "csv":
        fields = list(CSV_FIELDS)
        if any(r.architecture != "dense" for r in grid.records):
            fields.append("architecture")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(fields)
        for r in grid.records:
            w.writerow([fmt(getattr(r, f)) for f in fields])
        return buf.getvalue()
    if format == "json":
        runs = []
        for r in grid.records:
            d = {f: getattr(r, f) for f in CSV_FIELDS}
            if r.architecture != "dense":
                d["architecture"] = r.architecture
            runs.append(d)
        return json.dumps({"dataset_tokens": grid.dataset_tokens, "runs": runs}, indent=2) + "\n"
    raise InvalidArgument(f"unknown format {format!r}")


def reference_configs() -> list[ModelConfig]:
    configs = [
        ModelConfig.from_depth(d, p, params_exact=exact, tokens_per_sec=tps, mfu_pct=mfu)
        for d, p, exact, tps, mfu in ref.CONFIG_ROWS
    ]
    validate_config_table(configs)
    return configs


def load_reference_dataset() -> ReferenceDataset:
    """The full embedded dataset: result grid, configs, multi-seed runs, unique tokens."""
    params = {d: p for d, p, *_ in ref.CONFIG_ROWS}
    records = []
    for depth, row in ref.BPB_TABLE.items():
        for budget, bpb in zip(ref.BUDGETS_MIN, row):
            if bpb is not None:
                records.append(RunRecord(f"D{depth}", depth, params[depth], budget, bpb))
    grid = RunGrid(tuple(records), ref.DATASET_TOKENS)

    seeds = []
    for depth, values in ref.MULTISEED_BPB.items():
        for seed, bpb in zip(ref.MULTISEED_SEEDS, values):
            seeds.append(RunRecord(f"D{depth}", depth, params[depth], ref.MULTISEED_BUDGET_MIN, bpb, seed=seed))
    multiseed = RunGrid(tuple(seeds), ref.DATASET_TOKENS)
    return ReferenceDataset(grid, reference_configs(), multiseed, ref.DATASET_TOKENS)


def parse_hardware_profile(text: str | TextIO):
    """Parse ``{name, vram_gb?, points: [[params_m, tokens_per_sec, exact?], ...]}``."""
    from .hardware import HardwareProfile

    try:
        doc = json.loads(_read(text))
    except json.JSONDecodeError as e:
        raise InvalidArgument(f"invalid hardware profile JSON: {e}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("points"), list):
        raise InvalidArgument('hardware profile must be an object with a "points" array')
    points = []
    exact = []
    for p in doc["points"]:
        if not isinstance(p, (list, tuple)) or len(p) not in (2, 3):
            raise InvalidArgument(f"bad profile point {p!r}")
        points.append((float(p[0]), float(p[1])))
        exact.append(bool(p[2]) if len(p) == 3 else True)
    if len(points) < 2:
        raise InsufficientData(f"a hardware profile needs at least 2 points, got {len(points)}")
    return HardwareProfile(
        name=str(doc.get("name", "custom")),
        points=tuple(points),
        exact=tuple(exact),
        vram_gb=_opt(doc.get("vram_gb"), float),
    )
