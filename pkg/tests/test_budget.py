import statistics

import pytest
from hypothesis import given, settings, strategies as st

from tcscale.budget import (
    RegimeLabel,
    budget_reports,
    classify_regime,
    marginal_returns,
    multiseed_stats,
    optimum_at_budget,
    overfit_flags,
)
from tcscale.domain import RunRecord
from tcscale.errors import InsufficientData, NotFound
from tcscale.powerlaw import TiePolicy

from conftest import make_grid

OPTIMA = [("D8",), ("D10",), ("D14",), ("D14", "D16"), ("D16",), ("D20",), ("D24",), ("D26",)]
# best-BPB steps between consecutive budgets, from the results table
DELTAS = [-0.160, -0.028, -0.044, -0.039, -0.026, -0.012, -0.010]
RATES = [-0.384, -0.056, -0.044, -0.0195, -0.0065, -0.003, -0.000833]


def test_optimum_sequence(grid):
    assert [optimum_at_budget(grid, b)[0] for b in grid.budgets] == OPTIMA


def test_optimum_examples(grid):
    assert optimum_at_budget(grid, 30.0) == (("D10",), 85.9, 0.973)
    ids, params, bpb = optimum_at_budget(grid, 120.0)
    assert ids == ("D14", "D16") and params == pytest.approx(243.05) and bpb == 0.901
    assert optimum_at_budget(grid, 120.0, TiePolicy("exclude_budget"))[1] is None
    with pytest.raises(NotFound):
        optimum_at_budget(grid, 90.0)


def test_single_record_budget():
    g = make_grid({"D8": {5: 1.1}}, params={"D8": 50.3})
    assert optimum_at_budget(g, 5.0) == (("D8",), 50.3, 1.1)


def test_overfit_examples(grid):
    flags = {(m, b): d for m, b, d in overfit_flags(grid)}
    assert flags[("D8", 240.0)] == pytest.approx(0.019, abs=1e-9)
    assert flags[("D18", 1440.0)] == pytest.approx(0.012, abs=1e-9)
    # running minimum: 0.906 at 2h makes 0.919 at 12h a regression even after 0.886
    assert ("D8", 720.0) in flags
    assert ("D24", 1440.0) not in flags


def test_flags_at_24h(grid):
    at24 = {m: d for m, b, d in overfit_flags(grid) if b == 1440.0}
    assert set(at24) == {"D14", "D16", "D18", "D20", "D22"}
    for m, d in {"D14": 0.005, "D16": 0.010, "D18": 0.012, "D20": 0.010, "D22": 0.003}.items():
        assert at24[m] == pytest.approx(d, abs=0.0005)
    t = grid.bpb_table()["D24"]
    assert t[1440.0] - t[720.0] == pytest.approx(-0.007, abs=1e-9)


def test_no_flags_on_decreasing_series():
    g = make_grid({"D8": {5: 1.0, 30: 0.9, 60: 0.8}, "D10": {5: 1.1, 30: 0.95, 60: 0.7}})
    assert overfit_flags(g) == []


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.5, 1.5), min_size=2, max_size=8), st.floats(0, 0.009), st.floats(0, 0.009))
def test_flags_monotone_in_epsilon(vals, e1, e2):
    lo, hi = sorted((e1, e2))
    g = make_grid({"D8": {float(i + 1): v for i, v in enumerate(vals)}})
    assert set(map(tuple, overfit_flags(g, hi))) <= set(map(tuple, overfit_flags(g, lo)))


@pytest.mark.parametrize("budget,label", [
    (240.0, RegimeLabel.COMPUTE_BOUNDED),
    (720.0, RegimeLabel.TRANSITIONAL),
    (1440.0, RegimeLabel.DATA_BOUNDED),
    (5.0, RegimeLabel.COMPUTE_BOUNDED),
    (480.0, RegimeLabel.COMPUTE_BOUNDED),
])
def test_regimes(grid, budget, label):
    assert classify_regime(grid, budget) is label


def test_one_hour_regime(grid):
    # D10 gets worse from 30min to 1h while it sits between D8 and the D14 optimum
    assert classify_regime(grid, 60.0) is RegimeLabel.DATA_BOUNDED


def test_regime_needs_three_models():
    g = make_grid({"D8": {5: 1.0}, "D10": {5: 0.9}})
    with pytest.raises(InsufficientData):
        classify_regime(g, 5.0)


def test_monotone_curve_with_largest_tie_is_not_transitional():
    g = make_grid({"D8": {5: 1.0}, "D10": {5: 0.9}, "D12": {5: 0.9}})
    assert classify_regime(g, 5.0) is RegimeLabel.COMPUTE_BOUNDED
    g = make_grid({"D8": {5: 1.0}, "D10": {5: 0.9}, "D12": {5: 0.8}})
    assert classify_regime(g, 5.0) is RegimeLabel.TRANSITIONAL


@settings(max_examples=50, deadline=None)
@given(st.floats(-0.5, 0.5))
def test_regime_shift_invariant(grid, shift):
    shifted = grid.with_records(
        RunRecord(r.model_id, r.depth, r.params_m, r.budget_min, r.val_bpb + shift) for r in grid.records
    )
    for b in grid.budgets:
        assert classify_regime(shifted, b) is classify_regime(grid, b)


def test_budget_reports(grid):
    reps = budget_reports(grid)
    assert [r.optimum_models for r in reps] == OPTIMA
    table = grid.bpb_table()
    for r in reps:
        vals = [cells[r.budget_min] for cells in table.values() if r.budget_min in cells]
        assert r.optimum_bpb == min(vals)
        assert all(r.budget_min in table[m] for m in r.overfit_models)
    j = reps[-1].to_json()
    assert j["regime"] == "data_bounded" and j["optimum_models"] == ["D26"]


def test_marginal_returns(grid):
    rows = marginal_returns(grid)
    assert [r[0] for r in rows] == list(zip(grid.budgets, grid.budgets[1:]))
    for (_, d, rate), d_ref, r_ref in zip(rows, DELTAS, RATES):
        assert d == pytest.approx(d_ref, abs=0.0005)
        assert rate == pytest.approx(r_ref, abs=0.005)
    assert rows[0][1:] == pytest.approx((-0.160, -0.384), abs=1e-9)
    assert rows[-1][2] == pytest.approx(-0.010 / 12, abs=1e-12)


def test_marginal_flat_and_short():
    g = make_grid({"D8": {5: 0.9, 30: 0.9}})
    assert marginal_returns(g) == [((5.0, 30.0), 0.0, 0.0)]
    with pytest.raises(InsufficientData):
        marginal_returns(make_grid({"D8": {5: 0.9}}))


def test_multiseed(ref):
    stats, dom, notices = multiseed_stats(ref.multiseed)
    assert not notices
    d10 = stats["D10"]
    assert d10.mean == pytest.approx(0.97333, abs=1e-5)
    assert d10.std == pytest.approx(statistics.stdev([0.973, 0.974, 0.973]), abs=1e-12)
    assert d10.std == pytest.approx(0.00058, abs=1e-5)
    assert d10.cv_pct_population == pytest.approx(0.04, abs=0.01)
    assert dom[("D10", "D8")] and not dom[("D8", "D10")]


def test_multiseed_degenerate():
    recs = [RunRecord("D8", 8, 50.3, 30.0, 0.9, seed=s) for s in (1, 2)] + [RunRecord("D10", 10, 85.9, 30.0, 0.8, seed=1)]
    stats, dom, notices = multiseed_stats(make_grid({"D8": {1: 1}}).with_records(recs))
    assert stats["D8"].std == 0 and stats["D8"].cv_pct == 0
    assert "D10" not in stats and any("D10" in n for n in notices)
