import math

import pytest
from hypothesis import given, settings, strategies as st

from tcscale import hardware
from tcscale.errors import InsufficientData, InvalidArgument, UnfittedProfile
from tcscale.hardware import HardwareProfile

from conftest import EXACT_THROUGHPUT, ols_oracle


def test_fit_matches_oracle(profile):
    p = hardware.fit_throughput(profile)
    c, slope, r2, *_ = ols_oracle(EXACT_THROUGHPUT)
    assert p.fitted_beta == pytest.approx(-slope, abs=1e-9)
    assert p.fitted_c == pytest.approx(c, rel=1e-9)
    assert p.fitted_r2 == pytest.approx(r2, abs=1e-9)
    assert p.fitted_beta == pytest.approx(1.08, abs=0.03)
    assert not profile.fitted and p.fitted  # the input is left untouched


def test_fit_including_approximate(profile):
    a = hardware.fit_throughput(profile, include_approximate=True)
    c, slope, *_ = ols_oracle(profile.points)
    assert a.fitted_beta == pytest.approx(-slope, abs=1e-9)


def test_synthetic_beta():
    pts = tuple((n, 1e6 * n**-0.8) for n in (10, 30, 100, 300, 1000))
    p = hardware.fit_throughput(HardwareProfile("syn", pts))
    assert p.fitted_beta == pytest.approx(0.8, abs=1e-9)
    assert hardware.compute_scaling_exponent(p) == pytest.approx(0.2, abs=1e-9)


def test_two_point_beta():
    p = hardware.fit_throughput(HardwareProfile("two", ((50.3, 428e3), (519.0, 36e3))))
    assert p.fitted_beta == pytest.approx(math.log(428 / 36) / math.log(519 / 50.3), abs=1e-12)
    assert p.fitted_beta == pytest.approx(1.06, abs=0.005)


def test_fit_needs_two_exact_points():
    p = HardwareProfile("x", ((1.0, 10.0), (2.0, 5.0)), exact=(True, False))
    with pytest.raises(InsufficientData):
        hardware.fit_throughput(p)


def test_profile_validation():
    with pytest.raises(InvalidArgument):
        HardwareProfile("x", ((1.0, 10.0), (2.0, 20.0)))
    with pytest.raises(InvalidArgument):
        HardwareProfile("x", ((1.0, 10.0), (1.0, 5.0)))
    p = HardwareProfile("x", ((2.0, 5.0), (1.0, 10.0)))
    assert p.points == ((1.0, 10.0), (2.0, 5.0))


def test_throughput_at(profile, fitted_profile):
    assert hardware.throughput_at(profile, 200.9) == 110_000
    for n, t in profile.points:
        assert hardware.throughput_at(fitted_profile, n) == t
    # interpolation inside the range does not need a fit
    mid = hardware.throughput_at(profile, 100.0)
    assert 160_000 < mid < 252_000
    with pytest.raises(UnfittedProfile):
        hardware.throughput_at(profile, 1200.0)
    c, b = fitted_profile.fitted_c, fitted_profile.fitted_beta
    assert hardware.throughput_at(fitted_profile, 1200.0) == pytest.approx(c * 1200**-b, rel=1e-12)
    assert not hardware.in_measured_range(fitted_profile, 1200.0)
    assert hardware.throughput_at(fitted_profile, 200.9, source="fit") == pytest.approx(c * 200.9**-b)
    with pytest.raises(InvalidArgument):
        hardware.throughput_at(fitted_profile, 100.0, source="magic")


@settings(max_examples=200, deadline=None)
@given(st.floats(50.3, 1031.0), st.floats(50.3, 1031.0))
def test_interpolation_monotone(profile, a, b):
    lo, hi = sorted((a, b))
    assert hardware.throughput_at(profile, hi) <= hardware.throughput_at(profile, lo)


def test_tokens(profile):
    assert hardware.tokens_processed(profile, 855.6, 5) == pytest.approx(6.0e6)
    assert hardware.tokens_processed(profile, 50.3, 5) == pytest.approx(128.4e6)
    assert hardware.tokens_processed(profile, 50.3, 0) == 0


def test_epochs(profile):
    assert hardware.epochs(profile, 50.3, 720, 48e6) == pytest.approx(385.2, abs=0.05)
    assert hardware.epochs(profile, 1031.0, 1440, 48e6) == pytest.approx(9.0, abs=1e-9)
    one_epoch = 48e6 / (428_000 * 60)
    assert hardware.epochs(profile, 50.3, one_epoch, 48e6) == pytest.approx(1.0)
    with pytest.raises(InvalidArgument):
        hardware.epochs(profile, 50.3, 5, 0)


def test_flops(profile, fitted_profile):
    assert hardware.flops(profile, 50.3, 60) == pytest.approx(6 * 50.3e6 * 4.28e5 * 3600)
    assert hardware.flops(profile, 50.3, 60) == pytest.approx(4.65e17, rel=0.002)
    assert hardware.flops(profile, 50.3, 0) == 0
    n = 2000.0  # past the measured range, so both sizes use the law
    ratio = hardware.flops(fitted_profile, 2 * n, 60) / hardware.flops(fitted_profile, n, 60)
    assert ratio == pytest.approx(2 ** (1 - fitted_profile.fitted_beta), rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(1.0, 5000.0), st.floats(0.0, 5000.0), st.floats(0.1, 100.0))
def test_flops_identity_and_linearity(fitted_profile, n, t, k):
    tok = hardware.tokens_processed(fitted_profile, n, t)
    assert hardware.flops(fitted_profile, n, t) == pytest.approx(6 * n * 1e6 * tok, rel=1e-12)
    assert hardware.tokens_processed(fitted_profile, n, k * t) == pytest.approx(k * tok, rel=1e-12, abs=1e-6)


def test_compute_exponent(fitted_profile):
    assert hardware.compute_scaling_exponent(fitted_profile) == pytest.approx(-0.08, abs=0.03)
    unit = HardwareProfile("u", ((1.0, 4.0), (2.0, 2.0), (4.0, 1.0)))
    assert hardware.compute_scaling_exponent(hardware.fit_throughput(unit)) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(UnfittedProfile):
        hardware.compute_scaling_exponent(unit)


def test_builtin_profile(profile):
    assert profile.name == "rtx4090" and profile.vram_gb == 24
    assert len(profile.points) == 10 and sum(profile.exact) == 7
