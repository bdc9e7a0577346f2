"""Tests for specflow.diophantine."""

import numpy as np
import pytest
from mpmath import mp, mpf

from specflow.diophantine import (
    best_return_check,
    circle_norm,
    class_M,
    convergent_table,
    convergents,
    euler_rule,
    exponential_approximation_profile,
    golden_alpha,
    good_returns,
    make_alpha,
    make_liouville_alpha,
    norm_of_multiple,
    ostrowski_digits,
    power_rule,
    profile_trend,
    signed_residue,
    two_pow_q_rule,
)
from specflow.errors import InsufficientQuotients, InvalidQuotients

FIBONACCI = [1, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89]


def _silver():
    return make_alpha((0,), (2,))


def _brute_norm(alpha, q):
    with alpha.workprec():
        x = q * alpha.value()
        return abs(x - mp.nint(x))


class TestConvergents:
    def test_golden_fibonacci(self):
        qs = [c.q for c in convergents(golden_alpha(), 7)]
        assert qs == [1, 1, 2, 3, 5, 8, 13]

    def test_silver_pell(self):
        qs = [c.q for c in convergents(_silver(), 5)]
        assert qs == [1, 2, 5, 12, 29]

    def test_theta_matches_brute_force(self):
        alpha = golden_alpha()
        for c in convergents(alpha, 12)[1:]:
            assert float(abs(c.theta - _brute_norm(alpha, c.q))) < 1e-60

    def test_finite_stream_exhausted(self):
        alpha = make_alpha((0, 2, 3))
        with pytest.raises(InsufficientQuotients):
            convergents(alpha, 10)

    def test_n_must_be_positive(self):
        with pytest.raises(ValueError):
            convergents(golden_alpha(), 0)

    def test_bad_quotient(self):
        with pytest.raises(InvalidQuotients):
            make_alpha((0, 1, 0, 2))


class TestConvergentBounds:
    @pytest.mark.parametrize("alpha", [
        golden_alpha(),
        make_alpha((0,), (2,)),
        make_liouville_alpha(euler_rule(), seed=(0,)),
    ])
    def test_bounds_hold(self, alpha):
        rows = convergent_table(alpha, 25)
        assert len(rows) == 25
        assert all(r["lower_ok"] and r["upper_ok"] for r in rows)

    def test_euler_quotients(self):
        alpha = make_liouville_alpha(euler_rule(), seed=(0,))
        assert [alpha.a(k) for k in range(1, 10)] == [1, 2, 1, 1, 4, 1, 1, 6, 1]

    def test_theta_decreasing(self):
        rows = convergent_table(_silver(), 20)
        thetas = [r["theta"] for r in rows]
        assert all(b < a for a, b in zip(thetas, thetas[1:]))


class TestCircleNorm:
    def test_midpoint(self):
        assert circle_norm(mpf("0.5")) == mpf("0.5")

    def test_translation(self):
        assert circle_norm(mpf("3.25")) == mpf("0.25")

    def test_golden_thirteen(self):
        alpha = golden_alpha()
        with alpha.workprec():
            value = circle_norm(13 * alpha.value())
        theta, _ = alpha.theta(6)
        assert float(abs(value - theta)) < 1e-60

    def test_keeps_working_precision(self):
        alpha = golden_alpha()
        with alpha.workprec():
            x = 13 * alpha.value()
        value = circle_norm(x, alpha)
        theta, _ = alpha.theta(6)
        assert float(abs(value - theta)) < 1e-60


class TestNormOfMultiple:
    def test_best_return_is_theta(self):
        alpha = golden_alpha()
        value, _ = norm_of_multiple(alpha, 21)
        theta, _ = alpha.theta(7)
        assert float(abs(value - theta)) < 1e-60

    def test_golden_four(self):
        alpha = golden_alpha()
        value, error = norm_of_multiple(alpha, 4)
        assert float(abs(value - _brute_norm(alpha, 4))) < 1e-60
        assert error < mpf(2) ** -200

    def test_ostrowski_digits_reassemble(self):
        alpha = golden_alpha()
        for m in (1, 7, 100, 12345):
            assert sum(b * alpha.q(k) for k, b in ostrowski_digits(alpha, m)) == m

    def test_signed_residue_sign(self):
        alpha = golden_alpha()
        d_plus, _ = signed_residue(alpha, 4)
        d_minus, _ = signed_residue(alpha, -4)
        assert d_plus == -d_minus

    def test_liouville_tiny_norm(self):
        alpha = make_liouville_alpha(two_pow_q_rule(), seed=(0, 1))
        assert [alpha.q(n) for n in range(4)] == [1, 1, 3, 25]
        value, _ = norm_of_multiple(alpha, 25)
        assert 0 < value < mpf(1) / (25 * 2 ** 25)

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            norm_of_multiple(golden_alpha(), 0)


class TestGoodReturns:
    def test_golden_fibonacci(self):
        found = good_returns(golden_alpha(), 100)
        assert [g.q for g in found] == [1, 2, 3, 5, 8, 13, 21, 34, 55, 89]
        assert all(g.l == 1 and g.factorization_holds for g in found)

    def test_matches_brute_scan(self):
        alpha = make_alpha((0, 1, 1, 100), (1,))
        found = {g.q for g in good_returns(alpha, 2000)}
        scan = {q for q in range(1, 2001) if 2 * q * _brute_norm(alpha, q) < 1}
        assert found == scan

    def test_small_multiples_of_large_quotient(self):
        alpha = make_alpha((0, 1, 1, 100), (1,))
        found = {g.q: g for g in good_returns(alpha, 400)}
        q2 = alpha.q(2)
        assert 2 * q2 in found
        assert found[2 * q2].l == 2

    def test_q_must_be_positive(self):
        with pytest.raises(ValueError):
            good_returns(golden_alpha(), 0)


class TestClassM:
    def test_golden_is_trivial(self):
        members = class_M(golden_alpha(), 10_000)
        assert members.frequencies == [0, 1]
        assert 0 in members

    def test_liouville_best_returns_enter(self):
        alpha = make_liouville_alpha(power_rule(2), seed=(0, 1))
        members = class_M(alpha, 1 << 16)
        assert 31 in members and 29825 in members
        assert 62 in members and 59650 in members
        assert members.info(31).kind == "best_return"
        assert members.info(62).kind == "multiple" and members.info(62).l == 2

    def test_membership_inequality(self):
        alpha = make_liouville_alpha(power_rule(2), seed=(0, 1))
        for info in class_M(alpha, 5000).members[1:]:
            value, _ = norm_of_multiple(alpha, info.m)
            assert 2 * info.m ** 2 * value <= 1

    def test_two_pow_q_best_returns(self):
        alpha = make_liouville_alpha(two_pow_q_rule(), seed=(0, 1))
        members = class_M(alpha, 1000)
        assert 3 in members and 25 in members


class TestLiouvilleConstruction:
    def test_power_rule_growth(self):
        alpha = make_liouville_alpha(power_rule(2), seed=(0, 2))
        assert [alpha.q(n) for n in range(4)] == [1, 2, 11, 1344]
        for n in range(1, 3):
            assert alpha.q(n + 1) > alpha.q(n) ** 3

    def test_constant_rule_is_golden(self):
        alpha = make_liouville_alpha(lambda q: 1, seed=(0,))
        assert [alpha.q(n) for n in range(8)] == FIBONACCI[:8]

    def test_bad_rule(self):
        with pytest.raises(InvalidQuotients):
            alpha = make_liouville_alpha(lambda q: 0, seed=(0, 1))
            alpha.q(3)

    def test_huge_term_is_out_of_reach(self):
        alpha = make_liouville_alpha(two_pow_q_rule(), seed=(0, 1))
        with pytest.raises(InsufficientQuotients):
            alpha.q(5)


class TestProfiles:
    def test_best_return_check_golden(self):
        rows = best_return_check(golden_alpha(), 15)
        assert rows and all(r["holds"] for r in rows)

    def test_exponential_profile_decays_for_two_pow_q(self):
        alpha = make_liouville_alpha(two_pow_q_rule(), seed=(0, 1))
        rows = exponential_approximation_profile(alpha, 4)
        assert [r["q"] for r in rows] == [1, 1, 3, 25]
        assert rows[-1]["log2_scaled_gap"] < 0
        assert profile_trend(rows) == "to_zero"

    def test_exponential_profile_golden_grows(self):
        rows = exponential_approximation_profile(golden_alpha(), 12)
        gaps = np.array([r["log2_gap"] for r in rows])
        assert gaps[-1] > gaps[3]
        assert profile_trend(rows) == "bounded"
