"""Core value types: architecture configs, run records, grids and power-law fits.

Everything here is an immutable dataclass. Parameter counts are always data
(measured, or marked approximate); nothing in the package derives them from
depth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import InvalidArgument

HEAD_DIM = 64


def derive_dims(depth: int) -> tuple[int, int, int, int]:
    """Return ``(layers, dim, heads, head_dim)`` for a DEPTH value."""
    if isinstance(depth, bool) or not isinstance(depth, int) or depth < 1:
        raise InvalidArgument(f"depth must be a positive integer, got {depth!r}")
    return depth, HEAD_DIM * depth, depth, HEAD_DIM


@dataclass(frozen=True)
class ModelConfig:
    depth: int
    layers: int
    dim: int
    heads: int
    head_dim: int
    params_m: float
    params_exact: bool = True
    tokens_per_sec: float | None = None
    mfu_pct: float | None = None

    def __post_init__(self):
        for name in ("depth", "layers", "dim", "heads", "head_dim"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise InvalidArgument(f"{name} must be a positive integer, got {v!r}")
        if (self.layers, self.dim, self.heads, self.head_dim) != derive_dims(self.depth):
            # hand-built configs are allowed to break the DEPTH recipe, but
            # the shape must still be self-consistent
            if self.heads * self.head_dim != self.dim:
                raise InvalidArgument("heads * head_dim must equal dim")
        if not self.params_m > 0:
            raise InvalidArgument("params_m must be positive")
        if self.tokens_per_sec is not None and not self.tokens_per_sec > 0:
            raise InvalidArgument("tokens_per_sec must be positive")
        if self.mfu_pct is not None and not self.mfu_pct > 0:
            raise InvalidArgument("mfu_pct must be positive")

    @classmethod
    def from_depth(cls, depth: int, params_m: float, **kw) -> "ModelConfig":
        layers, dim, heads, head_dim = derive_dims(depth)
        return cls(depth, layers, dim, heads, head_dim, params_m, **kw)

    @property
    def model_id(self) -> str:
        return f"D{self.depth}"

    @property
    def follows_depth_recipe(self) -> bool:
        return (self.layers, self.dim, self.heads, self.head_dim) == derive_dims(self.depth)


def aspect_ratio(config: ModelConfig) -> float:
    """Width over depth; 64 for every config built from :func:`derive_dims`."""
    return config.dim / config.layers


def validate_config_table(configs: Sequence[ModelConfig]) -> None:
    """Check table-level invariants: params increasing, throughput decreasing in depth."""
    rows = sorted(configs, key=lambda c: c.depth)
    for lo, hi in zip(rows, rows[1:]):
        if lo.depth == hi.depth:
            raise InvalidArgument(f"duplicate depth {lo.depth}")
        if not hi.params_m > lo.params_m:
            raise InvalidArgument(f"params_m not increasing at depth {hi.depth}")
    with_tps = [c for c in rows if c.tokens_per_sec is not None]
    for lo, hi in zip(with_tps, with_tps[1:]):
        if not hi.tokens_per_sec < lo.tokens_per_sec:
            raise InvalidArgument(f"tokens_per_sec not decreasing at depth {hi.depth}")


@dataclass(frozen=True)
class RunRecord:
    model_id: str
    depth: int
    params_m: float
    budget_min: float
    val_bpb: float
    seed: int | None = None
    architecture: str = "dense"
    tokens_per_sec: float | None = None

    def __post_init__(self):
        if not self.model_id:
            raise InvalidArgument("model_id must be non-empty")
        if not isinstance(self.depth, int) or self.depth < 1:
            raise InvalidArgument(f"depth must be a positive integer, got {self.depth!r}")
        for name in ("params_m", "budget_min", "val_bpb"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise InvalidArgument(f"{name} must be a positive finite number, got {v!r}")
        if self.tokens_per_sec is not None and not self.tokens_per_sec > 0:
            raise InvalidArgument("tokens_per_sec must be positive")

    @property
    def key(self) -> tuple[str, float, int | None]:
        return self.model_id, self.budget_min, self.seed


@dataclass(frozen=True)
class RunGrid:
    records: tuple[RunRecord, ...]
    dataset_tokens: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        if not self.records:
            raise InvalidArgument("a RunGrid needs at least one record")
        seen = set()
        params_by_depth: dict[int, float] = {}
        for r in self.records:
            if r.key in seen:
                raise InvalidArgument(f"duplicate run {r.key}")
            seen.add(r.key)
            p = params_by_depth.setdefault(r.depth, r.params_m)
            if p != r.params_m:
                raise InvalidArgument(f"depth {r.depth} has conflicting params_m {p} and {r.params_m}")
        if self.dataset_tokens is not None and not self.dataset_tokens > 0:
            raise InvalidArgument("dataset_tokens must be positive")

    @property
    def budgets(self) -> list[float]:
        return sorted({r.budget_min for r in self.records})

    def models(self) -> list[tuple[str, int, float]]:
        """``(model_id, depth, params_m)`` for every model, ordered by size."""
        out = {(r.model_id, r.depth, r.params_m) for r in self.records}
        return sorted(out, key=lambda m: (m[2], m[1], m[0]))

    def at_budget(self, budget_min: float) -> list[RunRecord]:
        return [r for r in self.records if r.budget_min == budget_min]

    def bpb_table(self) -> dict[str, dict[float, float]]:
        """model_id -> budget -> BPB; several seeds in one cell are averaged."""
        acc: dict[str, dict[float, list[float]]] = {}
        for r in self.records:
            acc.setdefault(r.model_id, {}).setdefault(r.budget_min, []).append(r.val_bpb)
        return {m: {b: math.fsum(v) / len(v) for b, v in cells.items()} for m, cells in acc.items()}

    def with_records(self, records: Iterable[RunRecord]) -> "RunGrid":
        return RunGrid(tuple(records), self.dataset_tokens)


@dataclass(frozen=True)
class PowerLawFit:
    """Result of fitting ``y = coeff_a * x ** exponent_alpha`` in log-log space.

    ``r2`` is NaN when the log-y values have zero variance; ``ci95_*`` are
    infinite when only two points were fitted. Both cases are listed in
    ``flags``.
    """

    coeff_a: float
    exponent_alpha: float
    r2: float
    stderr_alpha: float
    ci95_low: float
    ci95_high: float
    n_points: int
    x_unit: str = ""
    y_unit: str = ""
    x_min: float | None = None
    x_max: float | None = None
    flags: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not self.coeff_a > 0:
            raise InvalidArgument("coeff_a must be positive")
        if self.n_points < 2:
            raise InvalidArgument("a fit needs at least two points")
        if not self.ci95_low <= self.exponent_alpha <= self.ci95_high:
            raise InvalidArgument("confidence interval must contain the exponent")
        if self.r2 > 1 + 1e-12:
            raise InvalidArgument("r2 cannot exceed 1")
        if self.stderr_alpha < 0:
            raise InvalidArgument("stderr_alpha must be non-negative")

    @property
    def degenerate_ci(self) -> bool:
        return "degenerate_ci" in self.flags

    def to_json(self) -> dict:
        def num(v):
            return v if v is not None and math.isfinite(v) else None

        out = {
            "coeff_a": self.coeff_a,
            "exponent_alpha": self.exponent_alpha,
            "r2": num(self.r2),
            "stderr_alpha": self.stderr_alpha,
            "ci95": [num(self.ci95_low), num(self.ci95_high)],
            "n_points": self.n_points,
            "x_unit": self.x_unit,
            "y_unit": self.y_unit,
        }
        if self.x_min is not None:
            out["x_range"] = [self.x_min, self.x_max]
        if self.flags:
            out["flags"] = list(self.flags)
        return out

    @classmethod
    def from_json(cls, d: dict) -> "PowerLawFit":
        lo, hi = d["ci95"]
        x_range = d.get("x_range") or (None, None)
        r2 = d.get("r2")
        return cls(
            coeff_a=d["coeff_a"],
            exponent_alpha=d["exponent_alpha"],
            r2=math.nan if r2 is None else r2,
            stderr_alpha=d["stderr_alpha"],
            ci95_low=-math.inf if lo is None else lo,
            ci95_high=math.inf if hi is None else hi,
            n_points=d["n_points"],
            x_unit=d.get("x_unit", ""),
            y_unit=d.get("y_unit", ""),
            x_min=x_range[0],
            x_max=x_range[1],
            flags=tuple(d.get("flags", ())),
        )
