import math

import numpy as np
import pytest
from scipy import stats

from tcscale import hardware
from tcscale.domain import RunGrid, RunRecord
from tcscale.ingest import load_reference_dataset

REFERENCE_BUDGETS = (5.0, 30.0, 60.0, 120.0, 240.0, 480.0, 720.0, 1440.0)
SIZE_ANCHORS = [(5, 50.3), (30, 85.9), (60, 200.9), (120, 243.05), (240, 285.2), (480, 519.0), (720, 855.6), (1440, 1031)]
LOSS_POINTS = [(5, 1.133), (30, 0.973), (60, 0.945), (120, 0.901), (240, 0.862), (480, 0.836), (720, 0.824), (1440, 0.814)]
DEPTH_ANCHORS = [(5, 8), (30, 10), (60, 14), (120, 15), (240, 16), (480, 20), (720, 24), (1440, 26)]
EXACT_THROUGHPUT = [(50.3, 428e3), (85.9, 252e3), (135.3, 160e3), (200.9, 110e3), (285.2, 78e3), (519, 36e3), (855.6, 20e3)]


def ols_oracle(points):
    """Independent log-log OLS via scipy.stats.linregress: (a, alpha, r2, stderr, ci_lo, ci_hi)."""
    x = np.log([p[0] for p in points])
    y = np.log([p[1] for p in points])
    res = stats.linregress(x, y)
    n = len(points)
    half = stats.t.ppf(0.975, n - 2) * res.stderr
    return math.exp(res.intercept), res.slope, res.rvalue**2, res.stderr, res.slope - half, res.slope + half


def bootstrap_oracle(points, resamples, seed):
    """Percentile bootstrap with the package's resampling rule, slopes via np.polyfit."""
    x = np.log([p[0] for p in points])
    y = np.log([p[1] for p in points])
    n = len(points)
    idx = np.random.default_rng(seed).integers(0, n, size=(resamples, n), dtype=np.int64)
    slopes = []
    for i in range(resamples):
        row = idx[i]
        attempt = 0
        while len(set(x[row])) < 2:
            attempt += 1
            row = np.random.default_rng([seed, i, attempt]).integers(0, n, size=n, dtype=np.int64)
        slopes.append(np.polyfit(x[row], y[row], 1)[0])
    lo, hi = np.percentile(slopes, [2.5, 97.5])
    return lo, hi


def make_grid(table, params=None, dataset_tokens=None):
    """Grid from {model_id: {budget: bpb}}; model Dk gets depth k."""
    recs = []
    for m, cells in table.items():
        d = int(m[1:])
        p = (params or {}).get(m, float(d * 10))
        for b, v in cells.items():
            recs.append(RunRecord(m, d, p, float(b), v))
    return RunGrid(tuple(recs), dataset_tokens)


@pytest.fixture(scope="session")
def ref():
    return load_reference_dataset()


@pytest.fixture(scope="session")
def grid(ref):
    return ref.grid


@pytest.fixture(scope="session")
def profile():
    return hardware.rtx4090_profile()


@pytest.fixture(scope="session")
def fitted_profile(profile):
    return hardware.fit_throughput(profile)


def pytest_terminal_summary(terminalreporter):
    rows = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            name = rep.nodeid.rsplit("::", 1)[-1]
            if "test_acceptance.py" in rep.nodeid and name.startswith("test_criterion_") and rep.when == "call":
                rows[name] = "PASS" if outcome == "passed" else "FAIL"
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(rows):
        label = name[len("test_criterion_"):]
        terminalreporter.write_line(f"criterion {label}: {rows[name]}")
