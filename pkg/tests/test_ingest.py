import io
import json

import pytest
from hypothesis import given, settings, strategies as st

from tcscale.domain import RunGrid, RunRecord
from tcscale.errors import EmptyInput, InsufficientData, InvalidArgument
from tcscale.ingest import CSV_FIELDS, load_reference_dataset, parse_hardware_profile, parse_runs, serialize_runs

HEADER = ",".join(CSV_FIELDS) + "\n"


def test_parse_single_row():
    grid, issues = parse_runs(HEADER + "D14,14,200.9,60,0.945,,\n")
    assert not issues
    assert grid.records == (RunRecord("D14", 14, 200.9, 60.0, 0.945),)


def test_parse_stream_input():
    grid, _ = parse_runs(io.StringIO(HEADER + "D14,14,200.9,60,0.945,,\n"))
    assert len(grid.records) == 1


@pytest.mark.parametrize("text", ["", "   \n", HEADER])
def test_empty_input(text):
    with pytest.raises(EmptyInput):
        parse_runs(text)


def test_missing_header_column():
    with pytest.raises(EmptyInput):
        parse_runs("model_id,depth\nD8,8\n")


def test_duplicate_key_is_error_issue():
    text = HEADER + "D8,8,50.3,5,1.133,42,\nD8,8,50.3,5,1.140,42,\n"
    grid, issues = parse_runs(text)
    assert grid is None
    assert any(i.severity == "error" and "duplicate" in i.message for i in issues)


def test_distinct_seeds_are_not_duplicates():
    grid, issues = parse_runs(HEADER + "D8,8,50.3,5,1.133,42,\nD8,8,50.3,5,1.140,123,\n")
    assert not issues and len(grid.records) == 2


def test_malformed_rows_withhold_grid():
    text = HEADER + "D8,8,50.3,5,1.133,,\nD10,10,85.9,5,-1,,\nD12,x,135.3,5,1.3,,\n"
    grid, issues = parse_runs(text)
    assert grid is None
    assert sorted(i.row for i in issues) == [2, 3]


def test_conflicting_params_for_depth():
    grid, issues = parse_runs(HEADER + "D8,8,50.3,5,1.1,,\nD8,8,51.0,30,1.0,,\n")
    assert grid is None and issues


def test_json_format():
    doc = {"dataset_tokens": 1000, "runs": [{"model_id": "D8", "depth": 8, "params_m": 50.3, "budget_min": 5, "val_bpb": 1.1}]}
    grid, issues = parse_runs(json.dumps(doc), "json")
    assert not issues and grid.dataset_tokens == 1000
    with pytest.raises(EmptyInput):
        parse_runs("[1, 2]", "json")
    with pytest.raises(InvalidArgument):
        parse_runs(HEADER, "xml")


def test_reference_dataset(ref):
    # every non-missing cell of the results table
    assert len(ref.grid.records) == 56
    assert ref.grid.budgets == [5.0, 30.0, 60.0, 120.0, 240.0, 480.0, 720.0, 1440.0]
    t = ref.grid.bpb_table()
    assert t["D20"][480.0] == 0.836
    assert 1440.0 not in t["D8"] and 1440.0 not in t["D10"]
    assert len(ref.configs) == 10
    d8 = ref.configs[0]
    assert (d8.depth, d8.tokens_per_sec, d8.params_m) == (8, 428_000, 50.3)
    assert len(ref.multiseed.records) == 12
    assert ref.dataset_tokens == 48_000_000 == ref.grid.dataset_tokens
    assert sorted({int(m[1:]) for m in t}) == list(range(8, 27, 2))


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_round_trip_reference(ref, fmt):
    for g in (ref.grid, ref.multiseed):
        back, issues = parse_runs(serialize_runs(g, fmt), fmt)
        assert not issues
        assert back.records == g.records
        if fmt == "json":
            assert back.dataset_tokens == g.dataset_tokens


records = st.builds(
    lambda d, b, v, s, tps: RunRecord(f"D{d}", d, d * 7.3 + 0.1, b, v, s, tokens_per_sec=tps),
    st.integers(1, 40),
    st.floats(0.5, 5000, allow_nan=False),
    st.floats(0.01, 10, allow_nan=False),
    st.one_of(st.none(), st.integers(0, 10_000)),
    st.one_of(st.none(), st.floats(1, 1e7, allow_nan=False)),
)


@settings(max_examples=60, deadline=None)
@given(st.lists(records, min_size=1, max_size=15, unique_by=lambda r: r.key), st.sampled_from(["csv", "json"]))
def test_round_trip_property(recs, fmt):
    g = RunGrid(tuple(recs))
    back, issues = parse_runs(serialize_runs(g, fmt), fmt)
    assert not issues and back.records == g.records


def test_architecture_column_round_trips():
    g = RunGrid((RunRecord("moe", 8, 50.0, 5.0, 1.143, architecture="moe"),))
    back, _ = parse_runs(serialize_runs(g))
    assert back.records[0].architecture == "moe"


def test_hardware_profile_parsing(profile):
    p = parse_hardware_profile(json.dumps({"name": "x", "points": [[50.3, 428000], [519.0, 36000]]}))
    assert len(p.points) == 2 and p.name == "x"
    with pytest.raises(InsufficientData):
        parse_hardware_profile('{"points": [[50.3, 428000]]}')
    exact = [pt for pt, e in zip(profile.points, profile.exact) if e]
    p7 = parse_hardware_profile(json.dumps({"name": "a", "vram_gb": 24, "points": exact}))
    assert len(p7.points) == 7 and p7.vram_gb == 24
    with pytest.raises(InvalidArgument):
        parse_hardware_profile("not json")


def test_hardware_profile_json_round_trip(profile):
    back = parse_hardware_profile(json.dumps(profile.to_json()))
    assert back == profile
