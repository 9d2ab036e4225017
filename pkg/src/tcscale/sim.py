"""Parametric loss surface that reproduces the compute-bound / data-bound U-curves.

    L(N, t) = E + A / N**a + B / D_eff(T)**b + gamma * max(0, R - R0)**p

with ``T = tau(N) * t`` tokens seen, ``R = max(0, T/U - 1)`` repeated epochs
and ``D_eff`` a saturating discount on repeated tokens. The Chinchilla-style
terms alone only ever improve with time, so they cannot make a model get
worse with longer training; the explicit penalty term is what lets small
models overfit at long budgets. Outputs are "bpb-like" numbers, not a
claim about real bits per byte.

Throughput comes from the profile's fitted law (``source="fit"``) so that the
simulated family follows one smooth tau(N).
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from importlib import resources
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import hardware, kernels
from .domain import ModelConfig, RunGrid, RunRecord
from .errors import InvalidArgument

CALIBRATED_FIELDS = ("e_floor", "a_n", "exp_n", "b_d", "exp_d", "r_star", "gamma", "r0")


@dataclass(frozen=True)
class SimParams:
    e_floor: float
    a_n: float
    exp_n: float
    b_d: float
    exp_d: float
    u_tokens: float  # math.inf for unlimited data
    r_star: float
    gamma: float
    r0: float
    p_exp: float = 2.0

    def __post_init__(self):
        for name in ("e_floor", "a_n", "exp_n", "b_d", "exp_d", "u_tokens", "r_star"):
            v = getattr(self, name)
            if not v > 0 or math.isnan(v):
                raise InvalidArgument(f"{name} must be positive, got {v!r}")
        for name in ("gamma", "r0"):
            v = getattr(self, name)
            if not v >= 0 or not math.isfinite(v):
                raise InvalidArgument(f"{name} must be non-negative and finite, got {v!r}")
        if not self.p_exp >= 1 or not math.isfinite(self.p_exp):
            raise InvalidArgument(f"p_exp must be >= 1, got {self.p_exp!r}")
        for name in ("e_floor", "a_n", "exp_n", "b_d", "exp_d", "r_star"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidArgument(f"{name} must be finite")

    def to_json(self) -> dict:
        d = dataclasses.asdict(self)
        if math.isinf(self.u_tokens):
            d["u_tokens"] = None
        return d

    @classmethod
    def from_json(cls, d: dict) -> "SimParams":
        d = dict(d)
        if d.get("u_tokens") is None:
            d["u_tokens"] = math.inf
        return cls(**d)

    def kernel_args(self) -> tuple:
        return (self.e_floor, self.a_n, self.exp_n, self.b_d, self.exp_d,
                float(self.u_tokens), self.r_star, self.gamma, self.r0, self.p_exp)


def _shipped() -> dict:
    with resources.files("tcscale").joinpath("data/sim_defaults.json").open() as f:
        return json.load(f)


def default_params() -> SimParams:
    """Shipped parameters that reproduce the three-regime sequence on the rtx4090 profile."""
    return SimParams.from_json(_shipped()["default"])


def initial_params() -> SimParams:
    """Neutral starting point for :func:`calibrate`."""
    return SimParams.from_json(_shipped()["initial"])


@dataclass(frozen=True)
class SimResult:
    grid: RunGrid
    params_used: SimParams
    profile_used: hardware.HardwareProfile


def effective_data(tokens: float, u_tokens: float, r_star: float) -> float:
    """Unique-token equivalent of ``tokens`` drawn from a ``u_tokens`` dataset."""
    if tokens < 0:
        raise InvalidArgument("tokens must be non-negative")
    if tokens <= u_tokens:
        return float(tokens)
    rep = tokens / u_tokens - 1.0
    return u_tokens * (1.0 + r_star * (1.0 - math.exp(-rep / r_star)))


def _fitted(profile: hardware.HardwareProfile) -> hardware.HardwareProfile:
    return profile if profile.fitted else hardware.fit_throughput(profile)


def _tps(profile, params_m) -> np.ndarray:
    return np.array([hardware.throughput_at(profile, p, source="fit") for p in params_m], dtype=np.float64)


def simulated_loss(params_m: float, budget_min: float, sim: SimParams, profile: hardware.HardwareProfile) -> float:
    profile = _fitted(profile)
    p = np.array([params_m], dtype=np.float64)
    out = kernels.sim_grid(p, _tps(profile, p), np.array([budget_min], dtype=np.float64), *sim.kernel_args())
    return float(out[0, 0])


def sweep(
    sim: SimParams,
    profile: hardware.HardwareProfile,
    budgets: Sequence[float],
    configs: Sequence[ModelConfig],
) -> SimResult:
    """Simulated BPB for every (config, budget); the grid feeds the budget analyses unchanged."""
    if not budgets or not configs:
        raise InvalidArgument("sweep needs at least one budget and one config")
    profile = _fitted(profile)
    configs = sorted(configs, key=lambda c: c.params_m)
    params = np.array([c.params_m for c in configs], dtype=np.float64)
    b = np.array(sorted(budgets), dtype=np.float64)
    loss = kernels.sim_grid(params, _tps(profile, params), b, *sim.kernel_args())
    if not np.isfinite(loss).all():
        raise InvalidArgument("simulation produced non-finite loss")
    records = [
        RunRecord(c.model_id, c.depth, c.params_m, float(b[j]), float(loss[i, j]))
        for i, c in enumerate(configs)
        for j in range(len(b))
    ]
    u = sim.u_tokens
    dataset_tokens = int(u) if math.isfinite(u) else None
    return SimResult(RunGrid(tuple(records), dataset_tokens), sim, profile)


class Calibration(NamedTuple):
    params: SimParams
    rmse: float
    converged: bool
    iterations: int
    initial_rmse: float
    notes: tuple[str, ...]


class _Coords:
    """Maps the eight free parameters to a well-scaled search vector.

    Amplitudes are expressed at the geometric-mean model size / token count
    of the reference cells so they decouple from their exponents. The loss
    floor and the penalty onset live on bounded linear scales because both
    are meaningful at zero; everything else is searched in log space.
    """

    E_SCALE = 0.1

    def __init__(self, n_ref: float, d_ref: float, r_max: float):
        self.n_ref, self.d_ref, self.r_max = n_ref, d_ref, r_max

    def encode(self, p: SimParams) -> np.ndarray:
        return np.array([
            p.e_floor / self.E_SCALE,
            math.log(p.a_n) - p.exp_n * math.log(self.n_ref),
            math.log(p.exp_n),
            math.log(p.b_d) - p.exp_d * math.log(self.d_ref),
            math.log(p.exp_d),
            math.log(p.r_star),
            math.log(p.gamma) if p.gamma > 0 else 0.0,
            p.r0 / self.r_max,
        ])

    def decode(self, z: np.ndarray, gamma_on: bool) -> tuple | None:
        if not z[0] > 0 or not 0 <= z[7] <= 1:
            return None
        try:
            exp_n, exp_d = math.exp(z[2]), math.exp(z[4])
            vals = (
                z[0] * self.E_SCALE,
                math.exp(z[1] + exp_n * math.log(self.n_ref)),
                exp_n,
                math.exp(z[3] + exp_d * math.log(self.d_ref)),
                exp_d,
                math.exp(z[5]),
                math.exp(z[6]) if gamma_on else 0.0,
                z[7] * self.r_max,
            )
        except OverflowError:
            return None
        return vals if all(math.isfinite(v) for v in vals) else None


def calibrate(
    initial: SimParams,
    reference: RunGrid,
    profile: hardware.HardwareProfile,
    max_iters: int = 20_000,
    seed: int = 0,
    accept: Callable[[SimParams], bool] | None = None,
    target_rmse: float = 0.0,
    step_tol: float = 1e-12,
) -> Calibration:
    """Fit the eight free parameters to a reference grid by derivative-free descent.

    Each sweep probes every search direction once; a successful probe
    triples that direction's step, a failed one reverses it and halves it.
    Once every direction has both succeeded and failed, the directions are
    re-orthogonalised along the accumulated progress (Rosenbrock's rotating
    coordinates) so narrow curved valleys are followed instead of zig-zagged.
    When all steps collapse below ``step_tol`` the search restarts from the
    current point on fresh axes, and stops once a restart gains nothing.

    The seed fixes the order of the starting axes. ``u_tokens`` and
    ``p_exp`` are held fixed; so is ``gamma`` when it starts at zero.
    Candidates with non-finite loss, or rejected by ``accept``, are skipped.
    """
    if max_iters < 0:
        raise InvalidArgument("max_iters must be non-negative")
    profile = _fitted(profile)
    table = reference.bpb_table()
    params_of = {m: p for m, _, p in reference.models()}
    cells = [(params_of[m], b, v) for m in sorted(table) for b, v in sorted(table[m].items())]
    pm = np.array([c[0] for c in cells], dtype=np.float64)
    sizes = sorted(set(pm))
    tps_of = dict(zip(sizes, _tps(profile, sizes)))
    tp = np.array([tps_of[p] for p in pm], dtype=np.float64)
    bm = np.array([c[1] for c in cells], dtype=np.float64)
    target = np.array([c[2] for c in cells], dtype=np.float64)

    u = float(initial.u_tokens)
    tokens = tp * bm * 60.0
    r_max = max(1.0, float((tokens / u - 1.0).max()), initial.r0)
    coords = _Coords(
        n_ref=math.exp(float(np.mean(np.log(pm * 1e6)))),
        d_ref=math.exp(float(np.mean(np.log(np.minimum(tokens, u))))),
        r_max=r_max,
    )
    gamma_on = initial.gamma > 0
    p_exp = initial.p_exp

    def objective(z) -> float:
        vals = coords.decode(z, gamma_on)
        if vals is None:
            return math.inf
        e, a, an, bd, ad, rs, g, r0 = vals
        with np.errstate(all="ignore"):
            r = kernels.sim_rmse(pm, tp, bm, target, e, a, an, bd, ad, u, rs, g, r0, p_exp)
        return r if math.isfinite(r) else math.inf

    def build(z) -> SimParams:
        vals = coords.decode(z, gamma_on)
        return SimParams(**dict(zip(CALIBRATED_FIELDS, vals)), u_tokens=initial.u_tokens, p_exp=p_exp)

    def admissible(z) -> bool:
        if accept is None:
            return True
        try:
            return bool(accept(build(z)))
        except InvalidArgument:
            return False

    x = coords.encode(initial)
    best = objective(x)
    initial_rmse = best
    if max_iters == 0:
        return Calibration(initial, best, False, 0, initial_rmse, ("max_iters=0: returned initial params",))

    n = len(x)
    free = [i for i in range(n) if i != 6 or gamma_on]
    rng = np.random.default_rng(seed)
    it = 0
    converged = False
    while True:
        basis = np.eye(n)[rng.permutation(free)]
        m = len(basis)
        steps = np.full(m, 0.1)
        progress = np.zeros(m)
        succeeded = np.zeros(m, dtype=bool)
        failed = np.zeros(m, dtype=bool)
        restart_from = best
        while it < max_iters and best > target_rmse:
            it += 1
            for i in range(m):
                cand = x + steps[i] * basis[i]
                v = objective(cand)
                if v < best and admissible(cand):
                    x, best = cand, v
                    progress[i] += steps[i]
                    steps[i] *= 3.0
                    succeeded[i] = True
                else:
                    steps[i] *= -0.5
                    failed[i] = True
            if succeeded.all() and failed.all():
                spans = np.array([(progress[i:, None] * basis[i:]).sum(axis=0) for i in range(m)])
                q, r = np.linalg.qr(spans.T)
                diag = np.diag(r)
                if np.all(np.abs(diag) > 1e-14):
                    basis = (q * np.sign(diag)).T
                steps = np.abs(steps)
                progress[:] = 0.0
                succeeded[:] = False
                failed[:] = False
            if np.abs(steps).max() < step_tol:
                break
        if best <= target_rmse:
            converged = True
            break
        if it >= max_iters:
            break
        if not best < restart_from * (1 - 1e-9):
            converged = True
            break

    notes = () if converged else (f"not converged after {max_iters} iterations; best-so-far returned",)
    return Calibration(build(x), best, converged, it, initial_rmse, notes)
