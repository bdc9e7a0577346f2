"""Tests for specflow.lacunary_clt."""

import math

import numpy as np
import pytest
from scipy.special import j0

from specflow.birkhoff import make_multi_frequency_plan, make_return_plan
from specflow.cohomology import reduce_to_best_returns, reduce_to_M
from specflow.diophantine import golden_alpha, make_liouville_alpha, power_rule
from specflow.errors import PlanError
from specflow.lacunary_clt import (
    KS_THRESHOLD,
    LacunaryArray,
    LacunaryRow,
    birkhoff_to_lacunary,
    characteristic_function,
    cosine_product_integral,
    distribution_table,
    dyadic_rows,
    ks_against_normal,
    row_diagnostics,
    sample_row,
    zero_representation_check,
)
from specflow.roof import make_resonant_roof


def _row(freqs, c=0.5, phases=None):
    u = len(freqs)
    return LacunaryRow(list(freqs), np.full(u, c), np.zeros(u) if phases is None else np.asarray(phases))


def _multi_array():
    alpha = make_liouville_alpha(power_rule(2), seed=(0, 2))
    phi = make_resonant_roof(alpha, amplitude=1.0, exponent=0.5, indices=(1, 2, 3, 4, 5), unit=1 / 32)
    best = reduce_to_best_returns(reduce_to_M(phi, alpha, 1 << 94), alpha)
    plan = make_multi_frequency_plan(alpha, best, 16.0, variance_target=0.12, slack=0.5, start=2)
    return birkhoff_to_lacunary(best, alpha, plan), plan


class TestRows:
    def test_dyadic_rows(self):
        arr = dyadic_rows([4, 8])
        assert arr.rows[0].frequencies == [1, 2, 4, 8]
        assert arr.rows[1].variance == pytest.approx(1.0)
        for check in arr.check():
            assert check["lacunary"] and check["normalized"] and check["zero_representation"]

    def test_zero_phases(self):
        arr = dyadic_rows([3], seed=None)
        assert arr.rows[0].phases.tolist() == [0.0, 0.0, 0.0]

    def test_maxima_decreasing(self):
        assert dyadic_rows([4, 8, 16]).maxima_decreasing

    def test_frequencies_must_increase(self):
        with pytest.raises(ValueError):
            _row([1, 4, 2])

    def test_lengths_must_match(self):
        with pytest.raises(ValueError):
            LacunaryRow([1, 2], np.ones(3), np.zeros(2))

    def test_single_term_lacunarity(self):
        assert _row([5]).lacunarity == math.inf

    def test_diagnostics(self):
        d = row_diagnostics(dyadic_rows([4]).rows[0])
        assert d["sum_squares"] == pytest.approx(2.0)
        assert d["sum_fourth"] == pytest.approx(1.0)
        assert d["lacunarity"] == 2.0
        assert d["zero_representation"] is True


class TestZeroRepresentation:
    def test_dominant(self):
        result = zero_representation_check([1, 3, 9, 27])
        assert result.passed and result.method == "dominance"

    def test_witness(self):
        result = zero_representation_check([1, 2, 3])
        assert result.passed is False
        assert any(result.witness)
        assert sum(b * q for b, q in zip(result.witness, [1, 2, 3])) == 0

    def test_longer_witness(self):
        result = zero_representation_check([3, 5, 7, 9])
        assert result.passed is False
        assert sum(b * q for b, q in zip(result.witness, [3, 5, 7, 9])) == 0

    def test_no_solution(self):
        result = zero_representation_check([4, 5, 7])
        assert result.passed is True
        assert result.method == "meet_in_the_middle"

    def test_undetermined(self):
        result = zero_representation_check(list(range(1, 23)))
        assert result.passed is None

    def test_must_increase(self):
        with pytest.raises(ValueError):
            zero_representation_check([2, 2])


class TestCosineProduct:
    def test_lacunary_row_gives_one(self):
        arr = dyadic_rows([8], seed=3)
        assert cosine_product_integral(arr, 0, 1.5) == pytest.approx(1.0)
        assert cosine_product_integral(arr, 0, 1.5, method="quadrature") == pytest.approx(1.0, abs=1e-12)

    def test_resonant_triple(self):
        row = _row([1, 2, 3], c=0.5)
        expected = 1 - 0.03125j
        assert cosine_product_integral(row, 0, 1.0) == pytest.approx(expected)
        assert cosine_product_integral(row, 0, 1.0, method="quadrature") == pytest.approx(expected, abs=1e-12)

    def test_too_many_terms(self):
        with pytest.raises(ValueError):
            cosine_product_integral(dyadic_rows([17]), 0, 1.0)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            cosine_product_integral(dyadic_rows([4]), 0, 1.0, method="simpson")


class TestDistribution:
    def test_sample_row_deterministic(self):
        arr = dyadic_rows([16])
        a = sample_row(arr, 0, 2000, seed=5)
        b = sample_row(arr, 0, 2000, seed=5)
        assert np.array_equal(a.samples, b.samples)
        assert a.seed == 5

    def test_sample_row_minimum(self):
        with pytest.raises(ValueError):
            sample_row(dyadic_rows([4]), 0, 10)

    def test_ks_variance(self):
        with pytest.raises(ValueError):
            ks_against_normal(np.zeros(10), 0.0, 0.0)

    def test_single_term_bessel(self):
        c = math.sqrt(2.0)
        arr = LacunaryArray([_row([1], c=c)])
        table = characteristic_function(arr, 0)
        assert table.method == "midpoint"
        assert np.allclose(table.values.real, j0(table.t * c), atol=1e-10)
        assert np.allclose(table.values.imag, 0.0, atol=1e-10)

    def test_cf_at_zero(self):
        table = characteristic_function(dyadic_rows([64]), 0, [0.0, 1.0], samples=2000)
        assert table.method == "dyadic_monte_carlo"
        assert table.values[0] == 1.0

    def test_dyadic_row_is_normal(self):
        summary = distribution_table(dyadic_rows([64]), samples=100_000, seed=0)[0]
        assert summary.expected_variance == pytest.approx(1.0)
        assert summary.variance == pytest.approx(1.0, abs=0.03)
        assert summary.ks <= KS_THRESHOLD
        assert summary.normal_within
        assert summary.to_dict()["lacunary"] is True

    def test_ks_shrinks_with_row_length(self):
        sizes = [8, 16, 32, 64, 128]
        table = distribution_table(dyadic_rows(sizes), samples=100_000, seed=0)
        assert [s.u for s in table] == sizes
        ks = [s.ks for s in table]
        assert all(b <= a + 0.01 for a, b in zip(ks, ks[1:]))
        assert ks[3] <= KS_THRESHOLD


class TestBirkhoffRows:
    def test_rows_follow_windows(self):
        arr, plan = _multi_array()
        assert [row.frequencies for row in arr.rows] == [[11], [1344, 2427716939]]
        assert all(check["normalized"] for check in arr.check())
        assert arr.rows[1].lacunarity >= 2
        assert [row.constant for row in arr.rows] == pytest.approx([float(s.m) for s in plan.steps])

    def test_coefficients_match_plan(self):
        arr, plan = _multi_array()
        for row, step in zip(arr.rows, plan.steps):
            assert row.coefficients.tolist() == pytest.approx([float(t["d"]) for t in step.terms])

    def test_return_plan_rejected(self):
        alpha = golden_alpha()
        plan = make_return_plan(alpha, 1.0, [1, 2])
        with pytest.raises(PlanError):
            birkhoff_to_lacunary(None, alpha, plan)
