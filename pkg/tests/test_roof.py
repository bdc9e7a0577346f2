"""Tests for specflow.roof."""

import math

import numpy as np
import pytest
from mpmath import mpf

from specflow.diophantine import make_liouville_alpha, power_rule
from specflow.errors import InvalidRoof, NonHermitianCoefficients
from specflow.roof import (
    FourierRoof,
    TrigPolynomial,
    c3_proxy,
    check_H1,
    check_H2,
    check_H3,
    check_hypotheses,
    dyadic_closed_form,
    dyadic_phases,
    evaluate,
    make_constant_roof,
    make_dyadic_roof,
    make_expdecay_roof,
    make_prime_roof,
    make_resonant_roof,
    make_table_roof,
    midpoint_grid,
    positivity_certificate,
)


def _violator():
    """c_1 = 0 while c_2, c_4 are not."""
    return make_table_roof([[0, 1.0], [2, 0.1], [4, 0.05]])


def _doubling_violator():
    """|c_{2m}| = m|c_m| on odd m; multiples of 4 vanish."""

    def rule(k):
        if k == 0:
            return mpf(1)
        if k % 2 == 1:
            return mpf("0.1") * mpf(k) ** -6
        if k % 4 == 2:
            return mpf("0.1") * mpf(k // 2) ** -5
        return mpf(0)

    return FourierRoof(kind="doubling", coefficient_rule=rule)


def _multi_alpha():
    return make_liouville_alpha(power_rule(2), seed=(0, 2))


class TestSampling:
    def test_midpoint_grid(self):
        x = midpoint_grid(4)
        assert x.tolist() == [0.125, 0.375, 0.625, 0.875]

    def test_on_grid_matches_cosine(self):
        poly = TrigPolynomial([1, 3], [mpf("0.5"), mpf("0.25")])
        sample = poly.on_grid(64)
        x = midpoint_grid(64)
        expected = np.cos(2 * np.pi * x) + 0.5 * np.cos(6 * np.pi * x)
        assert np.max(np.abs(sample.values - expected)) < 1e-12

    def test_period_reduction(self):
        poly = TrigPolynomial([4, 8], [mpf(1), mpf(1)])
        assert poly.period == 4
        assert poly.sample(64).method == "midpoint"

    def test_random_points_for_huge_frequency(self):
        poly = TrigPolynomial([1, 2 ** 80 + 1], [mpf(1), mpf(1)])
        sample = poly.sample(256, np.random.default_rng(0))
        assert sample.method == "dyadic_monte_carlo"
        assert sample.size == 256

    def test_dyadic_phases(self):
        x, phases = dyadic_phases([1, 3], 1000, np.random.default_rng(1))
        assert np.allclose(phases[:, 0], x)
        diff = np.abs(phases[:, 1] - np.mod(3 * x, 1.0))
        assert np.all(np.minimum(diff, 1 - diff) < 1e-12)

    def test_dyadic_phases_rejects_negative(self):
        with pytest.raises(ValueError):
            dyadic_phases([-1], 10, np.random.default_rng(0))


class TestEvaluate:
    def test_dyadic_closed_form(self):
        phi = make_dyadic_roof()
        for x in ("0.1", "0.25", "0.5", "0.8"):
            assert float(abs(evaluate(phi, mpf(x), 80) - dyadic_closed_form(mpf(x)))) < 1e-12

    def test_dyadic_minimum(self):
        assert float(dyadic_closed_form(mpf("0.5"))) == pytest.approx(1 / 3)

    def test_non_hermitian_table(self):
        with pytest.raises(NonHermitianCoefficients):
            make_table_roof([[0, 1.0], [1, 0.1, 0.1], [-1, 0.1, 0.1]])

    def test_imaginary_mean(self):
        with pytest.raises(NonHermitianCoefficients):
            make_table_roof([[0, 1.0, 0.5]])

    def test_table_mirrors_negative(self):
        phi = make_table_roof({0: 1.0, 1: 0.1 + 0.2j})
        assert phi.coefficient(-1) == phi.coefficient(1).conjugate()
        assert float(evaluate(phi, mpf(0), 4)) == pytest.approx(1.2)


class TestConstructors:
    def test_dyadic_coefficients(self):
        phi = make_dyadic_roof()
        assert phi.coefficient(0) == 1
        assert phi.coefficient(5) == mpf(2) ** -5
        assert not phi.is_finite

    def test_prime_support(self):
        phi = make_prime_roof()
        assert phi.coefficient(1) == mpf(1) / 32
        assert phi.coefficient(4) == 0
        assert float(phi.coefficient(5)) == pytest.approx(5.0 ** -5)
        assert phi.nonzero_frequencies(12) == [1, 2, 3, 5, 7, 11]

    def test_prime_exponent_range(self):
        with pytest.raises(InvalidRoof):
            make_prime_roof(exponent=4)

    def test_expdecay_regularity(self):
        with pytest.raises(InvalidRoof):
            make_expdecay_roof(1.0, 1.0, 2.5, 1.0)
        phi = make_expdecay_roof(1.0, 1.0, 2.5, 1.0, check_regularity=False)
        assert float(phi.coefficient(1)) == pytest.approx(math.exp(-2.5))

    def test_expdecay_parity_split(self):
        phi = make_expdecay_roof(1.0, 1.2, 1.5, 1.0, parity_split=True)
        assert float(phi.coefficient(2)) == pytest.approx(1.2 * math.exp(-2.0))
        assert float(phi.coefficient(3)) == pytest.approx(math.exp(-4.5))

    def test_expdecay_bounds_order(self):
        with pytest.raises(InvalidRoof):
            make_expdecay_roof(2.0, 1.0, 1.5, 1.0)

    def test_table_not_positive(self):
        with pytest.raises(InvalidRoof):
            make_table_roof([[0, 1.0], [1, 0.6]])

    def test_constant(self):
        phi = make_constant_roof(2.0)
        assert phi.is_constant
        assert phi.c0 == 2
        with pytest.raises(InvalidRoof):
            make_constant_roof(0.0)

    def test_resonant_ratios(self):
        alpha = _multi_alpha()
        phi = make_resonant_roof(alpha, amplitude=1.0, exponent=0.5, indices=(1, 2, 3, 4, 5), unit=1 / 32)
        assert phi.series_prefix and phi.is_finite
        assert phi.coefficient(1) == mpf(1) / 32
        theta, _ = alpha.theta(2)
        with alpha.workprec():
            ratio = abs(phi.coefficient(11)) / theta
        assert float(ratio) == pytest.approx(3 ** -0.5)

    def test_resonant_rejects_negative_index(self):
        with pytest.raises(InvalidRoof):
            make_resonant_roof(_multi_alpha(), indices=(-1, 2))

    def test_restricted_keeps_mean(self):
        phi = make_dyadic_roof().restricted([3, 25])
        assert phi.support == (3, 25)
        assert phi.c0 == 1
        assert phi.coefficient(4) == 0


class TestCertificates:
    def test_dyadic_positive(self):
        cert = positivity_certificate(make_dyadic_roof())
        assert cert.holds
        assert 0.3 < cert.lower_bound <= 1 / 3 + 1e-9

    def test_c3_proxy(self):
        assert c3_proxy(make_dyadic_roof()).holds
        assert c3_proxy(make_table_roof([[0, 1.0], [3, 0.1]])).holds

    def test_tail_bound(self):
        phi = make_dyadic_roof()
        assert float(phi.tail_bound(10)) == pytest.approx(2.0 ** -10, rel=1e-6)


class TestHypotheses:
    def test_dyadic(self):
        hyp = check_hypotheses(make_dyadic_roof(), 64)
        assert hyp.h1.passed and hyp.h2.passed and hyp.h3.passed
        assert hyp.h2.m0 == 3
        assert hyp.K1 == pytest.approx(1 / 7, rel=1e-6)
        assert hyp.K2 == pytest.approx(3.0, rel=1e-6)

    def test_prime(self):
        hyp = check_hypotheses(make_prime_roof(), 64)
        assert hyp.all_pass

    def test_violator_witness(self):
        phi = _violator()
        for check in (check_H1, check_H2, check_H3):
            result = check(phi, 8)
            assert result.verdict == "fail"
            assert result.witness == 1

    def test_report_dict(self):
        d = check_hypotheses(make_dyadic_roof(), 16).to_dict()
        assert d["h2"]["m0"] == 3
        assert d["all_pass"] is True

    def test_horizon_too_small(self):
        with pytest.raises(ValueError):
            check_H1(make_dyadic_roof(), 1)

    def test_h2_failure_persists_with_horizon(self):
        phi = make_table_roof([[0, 2.0], [1, 0.3], [2, 0.3], [3, 0.1], [4, 0.1], [6, 0.05], [8, 0.05]])
        for horizon in (6, 8, 16, 64):
            result = check_H2(phi, horizon)
            assert result.verdict == "fail"
            assert result.witness == 4

    def test_h3_failure_persists_with_horizon(self):
        phi = make_table_roof([[0, 4.0], [1, 0.3], [2, 0.3], [3, 0.3], [4, 0.01], [8, 0.2]])
        for horizon in (6, 8, 16, 64):
            result = check_H3(phi, horizon)
            assert result.verdict == "fail"
            assert result.witness == 4

    def test_dyadic_passes_at_every_horizon(self):
        for horizon in (8, 16, 64):
            hyp = check_hypotheses(make_dyadic_roof(), horizon)
            assert hyp.h2.passed and hyp.h3.passed
            assert hyp.h2.m0 == 3

    def test_expdecay_without_regularity_fails_h2(self):
        phi = make_expdecay_roof(1.0, 1.0, 2.5, 1.0, parity_split=True, check_regularity=False)
        for horizon in (16, 64):
            result = check_H2(phi, horizon)
            assert result.verdict == "fail"
            assert result.witness % 2 == 1

    def test_linear_growth_of_doubled_coefficient_fails_h3(self):
        phi = _doubling_violator()
        assert float(phi.coefficient(6).real) == pytest.approx(3 * float(phi.coefficient(3).real))
        for horizon in (16, 64, 256):
            result = check_H3(phi, horizon)
            assert result.verdict == "fail"
            assert result.witness == 3
