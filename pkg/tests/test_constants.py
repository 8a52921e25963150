import math

import pytest
from scipy.special import gamma

from nilspec.constants import (
    c0_euclidean,
    c0_heisenberg,
    c0_power,
    c0_scaled,
    constants_report,
    heisenberg_series,
    kernel_at_zero,
    p1_power_relation,
    p1_power_via_subordination,
    p1_zero_from_heat_trace,
    prefactor_discrepancy_ratio,
    subordination_check,
)
from nilspec.errors import CompletenessError
from nilspec.kernels import gaussian_heat
from nilspec.spectral_data import heisenberg_eigenvalues, heisenberg_model, torus_eigenvalues, torus_model, transform_spectrum

PI = math.pi
P1 = (4 * PI) ** -0.5


def test_c0_euclidean():
    assert c0_euclidean(1) == pytest.approx(1 / (2 * PI), rel=1e-15)
    assert c0_euclidean(2) == pytest.approx(1 / (4 * PI), rel=1e-15)
    for n in (1, 2, 3):
        assert c0_euclidean(n) == pytest.approx(gaussian_heat(n, 1, [0] * n) / gamma(n / 2), rel=1e-12)


def test_c0_heisenberg_modes():
    assert c0_heisenberg(1, prefactor_mode="paper") == pytest.approx(1 / (64 * PI**2), rel=1e-14)
    assert c0_heisenberg(1, prefactor_mode="consistent") == pytest.approx(1 / 16, rel=1e-14)
    with pytest.raises(ValueError):
        c0_heisenberg(1, prefactor_mode="other")


@pytest.mark.parametrize("n", [1, 2, 3])
def test_heisenberg_series_partial_sums(n):
    closed, _ = heisenberg_series(n)
    prev = 0.0
    for terms in (1, 5, 50, 500, 5000):
        partial, bound = heisenberg_series(n, terms)
        assert partial > prev
        assert partial <= closed <= partial + bound
        prev = partial
    for mode in ("paper", "consistent"):
        vals = [c0_heisenberg(n, terms=t, prefactor_mode=mode) for t in (1, 10, 100)]
        assert vals == sorted(vals)


def test_heisenberg_series_n1_closed_form():
    assert heisenberg_series(1)[0] == pytest.approx(PI**2 / 8, rel=1e-15)


def test_prefactor_ratio():
    for n in (1, 2):
        assert prefactor_discrepancy_ratio(n) == pytest.approx((4 * PI**2) ** n, rel=1e-13)
    assert 39 < prefactor_discrepancy_ratio(1) < 40


def test_p1_from_heat_trace_torus():
    spec = torus_eigenvalues(1, 4000)
    p1, err = p1_zero_from_heat_trace(spec)
    assert p1 == pytest.approx(P1, abs=1e-6)
    # the estimate is the size of the extrapolation step, deliberately conservative
    assert abs(p1 - P1) < err < 1e-5
    with pytest.raises(CompletenessError):
        p1_zero_from_heat_trace(torus_eigenvalues(1, 100))


def test_p1_from_heat_trace_heisenberg():
    spec = heisenberg_eigenvalues(1, 1200)
    p1, _ = p1_zero_from_heat_trace(spec, probes=(0.05, 0.1))
    assert p1 == pytest.approx(1 / 16, rel=1e-2)
    # the alternative "paper" prefactor convention is off by 4 pi^2
    paper = c0_heisenberg(1, prefactor_mode="paper") * math.factorial(1)
    assert p1 / paper == pytest.approx(4 * PI**2, rel=1e-2)


def test_p1_scaled_spectrum():
    spec = transform_spectrum(torus_eigenvalues(1, 4000), 2, 1)
    p1, _ = p1_zero_from_heat_trace(spec, model=torus_model(1), probes=(0.005, 0.01, 0.02))
    # reading the scaled trace against the unscaled model recovers p1 * 2^(-1/2)
    assert p1 == pytest.approx(P1 * 2**-0.5, abs=1e-6)


def test_c0_scaling_identities():
    c0 = 1 / (2 * PI)
    assert c0_power(c0, 1) == c0
    assert c0_scaled(c0, 1, 1, 2) == c0
    assert c0_power(c0, 2) == pytest.approx(1 / (4 * PI), rel=1e-15)
    there = c0_scaled(c0, 4.0, 3, 2)
    assert c0_scaled(there, 0.25, 3, 2) == c0
    with pytest.raises(ValueError):
        c0_scaled(c0, 0, 1, 2)


def test_p1_power_relation():
    assert p1_power_relation(P1, 1, 1, 2) == P1
    sq = p1_power_relation(P1, 2, 1, 2)
    assert sq == pytest.approx(gamma(1.25) / PI, abs=1e-12)
    assert sq == pytest.approx(0.2885169, abs=1e-6)
    twice = p1_power_relation(sq, 2, 1, 4)
    assert twice == pytest.approx(p1_power_relation(P1, 4, 1, 2), rel=1e-14)
    sub, err = p1_power_via_subordination(P1, 1, 2)
    assert sub == pytest.approx(sq, rel=1e-10)
    assert err < 1e-10


def test_kernel_at_zero():
    m = torus_model(1)
    lhs, rhs = kernel_at_zero("exp", m)
    assert lhs == pytest.approx(P1, rel=1e-15)
    assert rhs == pytest.approx(lhs, rel=1e-10)
    lhs, rhs = kernel_at_zero("lambda_exp", m)
    assert lhs == pytest.approx(P1 / 2, rel=1e-15)
    assert rhs == pytest.approx(lhs, rel=1e-10)
    assert kernel_at_zero("zero", m) == (0.0, 0.0)
    for n in (2, 3):
        lhs, rhs = kernel_at_zero("exp_sq", torus_model(n))
        assert rhs == pytest.approx(lhs, rel=1e-10)
    with pytest.raises(NotImplementedError):
        kernel_at_zero("exp", heisenberg_model(1))


def test_subordination():
    lhs, rhs = subordination_check(0.5, 1.0)
    assert lhs == pytest.approx(math.exp(-1), rel=1e-15)
    assert rhs == pytest.approx(lhs, abs=1e-8)
    lhs, rhs = subordination_check(0.5, 0.0)
    assert lhs == 1.0 and rhs == pytest.approx(1.0, abs=1e-8)
    lhs, rhs = subordination_check(0.5, 4.0)
    assert lhs == pytest.approx(math.exp(-2), rel=1e-15)
    assert rhs == pytest.approx(lhs, abs=1e-8)
    with pytest.raises(ValueError):
        subordination_check(1.5, 1.0)


def test_constants_report_agrees():
    reports = constants_report()
    names = [r.name for r in reports]
    assert "heisenberg_prefactor_ratio_consistent_over_paper" in names
    by = {r.name: r for r in reports}
    assert by["c0_heisenberg_n1"].agree
    assert not by["c0_heisenberg_n1_paper_prefactor"].agree
    ratio = dict((label, v) for label, v, _ in by["heisenberg_prefactor_ratio_consistent_over_paper"].routes)
    assert 39 < ratio["series_ratio"] < 40
    assert by["c0_heisenberg_n1_paper_prefactor"].discrepancy
    assert all(r.agree for r in reports if not r.discrepancy)
