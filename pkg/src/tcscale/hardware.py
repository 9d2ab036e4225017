"""Throughput law ``tau(N) = c * N**-beta`` and the time-to-compute bridge.

Inside the measured size range throughput is interpolated log-log between
the bracketing points; the fitted law is only used to extrapolate.
"""

from __future__ import annotations

import bisect
import dataclasses
import math
from dataclasses import dataclass

from . import reference_data as ref
from .errors import InsufficientData, InvalidArgument, UnfittedProfile
from .powerlaw import fit_power_law

FLOPS_PER_PARAM_TOKEN = 6


@dataclass(frozen=True)
class HardwareProfile:
    name: str
    points: tuple[tuple[float, float], ...]
    exact: tuple[bool, ...] = ()
    fitted_c: float | None = None
    fitted_beta: float | None = None
    fitted_r2: float | None = None
    vram_gb: float | None = None

    def __post_init__(self):
        pts = tuple((float(p), float(t)) for p, t in self.points)
        exact = tuple(self.exact) or (True,) * len(pts)
        if len(exact) != len(pts):
            raise InvalidArgument("exact flags must match points")
        order = sorted(range(len(pts)), key=lambda i: pts[i][0])
        pts = tuple(pts[i] for i in order)
        exact = tuple(exact[i] for i in order)
        for p, t in pts:
            if not (p > 0 and t > 0):
                raise InvalidArgument(f"profile point ({p}, {t}) must be positive")
        for (p0, t0), (p1, t1) in zip(pts, pts[1:]):
            if p1 == p0:
                raise InvalidArgument(f"duplicate size {p0} in profile")
            if not t1 < t0:
                raise InvalidArgument("tokens_per_sec must decrease strictly with params_m")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "exact", exact)

    @property
    def fitted(self) -> bool:
        return self.fitted_c is not None and self.fitted_beta is not None

    @property
    def params_range(self) -> tuple[float, float]:
        return self.points[0][0], self.points[-1][0]

    def to_json(self) -> dict:
        d = {"name": self.name, "points": [[p, t, e] for (p, t), e in zip(self.points, self.exact)]}
        if self.vram_gb is not None:
            d["vram_gb"] = self.vram_gb
        return d


def rtx4090_profile() -> HardwareProfile:
    """Measured single-GPU throughput for the DEPTH family (D8..D26)."""
    return HardwareProfile(
        name="rtx4090",
        points=tuple((p, tps) for _, p, _, tps, _ in ref.CONFIG_ROWS),
        exact=tuple(exact for _, _, exact, _, _ in ref.CONFIG_ROWS),
        vram_gb=24.0,
    )


def fit_throughput(profile: HardwareProfile, include_approximate: bool = False) -> HardwareProfile:
    """Fit the throughput law; returns a copy with ``fitted_c/beta/r2`` set.

    Approximate points (e.g. the batch-size-1 D26 row) are left out unless
    ``include_approximate`` is set.
    """
    pts = [pt for pt, e in zip(profile.points, profile.exact) if e or include_approximate]
    if len(pts) < 2:
        raise InsufficientData(f"throughput fit needs 2 points, got {len(pts)}")
    fit = fit_power_law(pts, "Mparams", "tokens/s")
    return dataclasses.replace(profile, fitted_c=fit.coeff_a, fitted_beta=-fit.exponent_alpha, fitted_r2=fit.r2)


def in_measured_range(profile: HardwareProfile, params_m: float) -> bool:
    lo, hi = profile.params_range
    return lo <= params_m <= hi


def throughput_at(profile: HardwareProfile, params_m: float, source: str = "auto") -> float:
    """Tokens/second for a model of ``params_m`` million parameters.

    ``source="auto"`` interpolates inside the measured range and falls back
    to the fitted law outside it; ``source="fit"`` always uses the law.
    """
    if not params_m > 0:
        raise InvalidArgument("params_m must be positive")
    if source == "auto" and in_measured_range(profile, params_m):
        sizes = [p for p, _ in profile.points]
        i = bisect.bisect_left(sizes, params_m)
        if sizes[i] == params_m:
            return profile.points[i][1]
        (p0, t0), (p1, t1) = profile.points[i - 1], profile.points[i]
        w = (math.log(params_m) - math.log(p0)) / (math.log(p1) - math.log(p0))
        return math.exp(math.log(t0) + w * (math.log(t1) - math.log(t0)))
    if source not in ("auto", "fit"):
        raise InvalidArgument(f"unknown throughput source {source!r}")
    if not profile.fitted:
        raise UnfittedProfile(f"profile {profile.name!r} is unfitted and {params_m}M is outside its measured range")
    return profile.fitted_c * params_m ** (-profile.fitted_beta)


def tokens_processed(profile: HardwareProfile, params_m: float, budget_min: float, source: str = "auto") -> float:
    if budget_min < 0:
        raise InvalidArgument("budget_min must be non-negative")
    return throughput_at(profile, params_m, source) * budget_min * 60.0


def epochs(profile: HardwareProfile, params_m: float, budget_min: float, dataset_tokens: float, source: str = "auto") -> float:
    if not dataset_tokens > 0:
        raise InvalidArgument("dataset_tokens must be positive")
    return tokens_processed(profile, params_m, budget_min, source) / dataset_tokens


def flops(profile: HardwareProfile, params_m: float, budget_min: float, source: str = "auto") -> float:
    """Training FLOPs ``6 * N * tau(N) * t``."""
    return FLOPS_PER_PARAM_TOKEN * (params_m * 1e6) * tokens_processed(profile, params_m, budget_min, source)


def compute_scaling_exponent(profile: HardwareProfile) -> float:
    """Exponent of N in C(N, t) at fixed t, i.e. ``1 - beta``."""
    if not profile.fitted:
        raise UnfittedProfile(f"profile {profile.name!r} has no throughput fit")
    return 1.0 - profile.fitted_beta
