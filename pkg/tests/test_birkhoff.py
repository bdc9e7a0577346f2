"""Tests for specflow.birkhoff."""

from dataclasses import replace

import numpy as np
import pytest
from mpmath import mp

from specflow.birkhoff import (
    PASS,
    REFUTED,
    birkhoff_closeness,
    birkhoff_direct,
    birkhoff_polynomial,
    criterion_integral,
    delta_n,
    equivalent_distances_check,
    gaussian_norm_expectation,
    kernel,
    lambda_grid,
    lambda_representative,
    make_multi_frequency_plan,
    make_return_plan,
    make_single_frequency_plan,
    measure_bound,
    phase_defect_integral,
    range_derivative_measure,
    range_threshold_lambda,
    weak_mixing_certificate,
)
from specflow.cohomology import reduce_to_best_returns, reduce_to_M
from specflow.diophantine import golden_alpha, make_liouville_alpha, power_rule, two_pow_q_rule
from specflow.errors import PlanError
from specflow.roof import make_dyadic_roof, make_resonant_roof, midpoint_grid


def _single_setup():
    alpha = make_liouville_alpha(two_pow_q_rule(), seed=(0, 1))
    reduced = reduce_to_M(make_dyadic_roof(), alpha, 1024)
    return alpha, reduced.roof


def _multi_setup():
    alpha = make_liouville_alpha(power_rule(2), seed=(0, 2))
    phi = make_resonant_roof(alpha, amplitude=1.0, exponent=0.5, indices=(1, 2, 3, 4, 5), unit=1 / 32)
    best = reduce_to_best_returns(reduce_to_M(phi, alpha, 1 << 94), alpha)
    return alpha, best


class TestKernel:
    def test_trivial_length(self):
        kv = kernel(golden_alpha(), 1, 3)
        assert float(abs(kv.value - 1)) < 1e-60

    def test_geometric_sum(self):
        alpha = golden_alpha()
        kv = kernel(alpha, 3, 2)
        with alpha.workprec():
            a = alpha.value()
            expected = 1 + mp.expjpi(4 * a) + mp.expjpi(8 * a)
        assert float(abs(kv.value - expected)) < 1e-60
        assert kv.sandwich_ok

    def test_direct_matches_fourier(self):
        alpha = golden_alpha()
        phi = make_dyadic_roof()
        x = np.array([0.1, 0.37, 0.8])
        poly, _ = birkhoff_polynomial(phi, alpha, 5, horizon=64)
        fourier = float(poly.constant) + poly.at_points(x)
        assert np.allclose(birkhoff_direct(phi, alpha, 5, x), fourier, atol=1e-10)

    def test_direct_matches_fourier_on_grid(self):
        alpha = golden_alpha()
        phi = make_dyadic_roof().truncate(32)
        x = midpoint_grid(256)
        ms = list(range(1, 101)) + [alpha.q(n) for n in range(5, 13)]
        for m in ms:
            poly, kernels = birkhoff_polynomial(phi, alpha, m)
            fourier = float(poly.constant) + poly.at_points(x)
            direct = birkhoff_direct(phi, alpha, m, x, horizon=32)
            assert np.max(np.abs(direct - fourier)) <= 1e-9
            assert all(kv.sandwich_ok for kv in kernels)

    def test_cache_is_bounded(self):
        assert kernel.cache_info().maxsize is not None

    def test_m_positive(self):
        with pytest.raises(ValueError):
            birkhoff_direct(make_dyadic_roof(), golden_alpha(), 0, 0.5)


class TestPlans:
    def test_return_plan(self):
        plan = make_return_plan(golden_alpha(), 1.0, range(1, 6))
        assert plan.kind == "return"
        assert plan.ms == [1, 2, 3, 5, 8]
        assert plan.norms_decreasing

    def test_single_plan_multipliers(self):
        alpha = make_liouville_alpha(two_pow_q_rule(), seed=(0, 1))
        plan = make_single_frequency_plan(alpha, [2, 3], 16.0)
        assert plan.ms[0] == 3 * 3
        assert plan.steps[1].q == 25
        assert plan.steps[1].b == 8388609
        assert plan.norms_decreasing
        assert not plan.notes

    def test_single_plan_out_of_reach(self):
        alpha = make_liouville_alpha(two_pow_q_rule(), seed=(0, 1))
        with pytest.raises(PlanError):
            make_single_frequency_plan(alpha, [4], 16.0)
        with pytest.raises(PlanError):
            make_single_frequency_plan(alpha, [2, 3], 16.0, count=3)

    def test_empty_subsequence(self):
        with pytest.raises(PlanError):
            make_single_frequency_plan(golden_alpha(), [], 1.0)

    def test_zero_lambda(self):
        with pytest.raises(PlanError):
            make_return_plan(golden_alpha(), 0.0, [1, 2])

    def test_multi_plan_windows(self):
        alpha, best = _multi_setup()
        plan = make_multi_frequency_plan(alpha, best, 16.0, variance_target=0.12, slack=0.5, start=2)
        assert [s.window for s in plan.steps] == [(2, 2), (3, 4)]
        assert plan.truncated
        assert plan.norms_decreasing

    def test_multi_plan_needs_best_returns(self):
        alpha = make_liouville_alpha(power_rule(2), seed=(0, 2))
        phi = make_resonant_roof(alpha, indices=(1, 2, 3, 4, 5))
        stage_m = reduce_to_M(phi, alpha, 1 << 94)
        with pytest.raises(PlanError):
            make_multi_frequency_plan(alpha, stage_m, 16.0)


class TestLambdaRepresentative:
    def test_dyadic_cut(self):
        rep = lambda_representative(make_dyadic_roof(), 16.0)
        assert rep.dropped == list(range(1, 13))
        assert rep.kept[0] == 13
        assert rep.certified

    def test_tail_too_heavy(self):
        with pytest.raises(PlanError):
            lambda_representative(make_dyadic_roof(), 1e6, horizon=8)

    def test_single_keeps_multiples_of_25(self):
        _, roof = _single_setup()
        rep = lambda_representative(roof, 16.0)
        assert 1 in rep.dropped and 3 in rep.dropped
        assert rep.kept[0] == 25
        assert all(m % 25 == 0 for m in rep.kept)


class TestCriterion:
    def test_discrete_refuted(self):
        alpha = golden_alpha()
        phi = make_dyadic_roof().truncate(64)
        plan = make_return_plan(alpha, 1.0, range(1, 17))
        cert = weak_mixing_certificate(plan, phi, alpha, [1.0])
        assert cert.status == REFUTED
        points = cert.per_lambda[0].points
        assert len(points) == 16
        assert points[-1].integral < 0.02

    def test_criterion_resolution(self):
        alpha = golden_alpha()
        plan = make_return_plan(alpha, 0.5, [1, 2, 3])
        points = criterion_integral(plan, make_dyadic_roof().truncate(32), alpha)
        assert all(p.resolved and p.method == "midpoint" for p in points)
        assert all(0 <= p.integral <= 0.5 for p in points)

    def test_phase_defect_between_bounds(self):
        alpha = golden_alpha()
        plan = make_return_plan(alpha, 1.0, [2, 3, 4])
        rows = phase_defect_integral(plan, make_dyadic_roof().truncate(32), alpha)
        assert [r["m"] for r in rows] == [2, 3, 5]
        for r in rows:
            assert r["lower"] - 1e-12 <= r["defect"] <= r["upper"] + 1e-12

    def test_zero_lambda_rejected(self):
        alpha = golden_alpha()
        plan = make_return_plan(alpha, 1.0, [1, 2])
        with pytest.raises(PlanError):
            weak_mixing_certificate(plan, make_dyadic_roof().truncate(8), alpha, [0.0])


class TestSingleFrequencyEstimates:
    def test_range_and_measure(self):
        alpha, roof = _single_setup()
        rep = lambda_representative(roof, 16.0)
        plan = make_single_frequency_plan(alpha, [3], 16.0)
        est = range_derivative_measure(plan, 1, rep.roof, alpha, K1=1 / 7, K2=3.0)
        assert est.above_threshold
        assert est.range_ok
        assert est.measure_ok
        assert est.measure_bound == pytest.approx(measure_bound(1 / 7, 3.0))

    def test_closeness_without_rest(self):
        alpha, roof = _single_setup()
        rep = lambda_representative(roof, 16.0)
        plan = make_single_frequency_plan(alpha, [3], 16.0)
        close = birkhoff_closeness(plan, 1, rep.roof, alpha)
        assert close["measured"] == 0.0
        assert close["within"]

    def test_closeness_with_rest(self):
        alpha, roof = _single_setup()
        rep = lambda_representative(roof, 16.0)
        plan = make_single_frequency_plan(alpha, [2], 16.0)
        close = birkhoff_closeness(plan, 1, rep.roof, alpha)
        assert close["m"] == 9
        assert close["measured"] > 0
        assert close["measured"] <= close["analytic"] + 1e-12
        assert close["analytic"] < 0.125
        assert close["within"]

    def test_return_plan_rejected(self):
        alpha = golden_alpha()
        plan = make_return_plan(alpha, 1.0, [1, 2])
        with pytest.raises(PlanError):
            range_derivative_measure(plan, 1, make_dyadic_roof().truncate(8), alpha)

    def test_measure_bound_value(self):
        assert measure_bound(1 / 7, 3.0) == pytest.approx((1 - 4 / 7) / 32)


class TestMultiFrequencyEstimates:
    def test_delta_decreases(self):
        alpha, best = _multi_setup()
        plan = make_multi_frequency_plan(alpha, best, 16.0, variance_target=0.12, slack=0.5, start=2)
        rows = delta_n(plan, best.roof, alpha)
        assert len(rows) == 2
        assert rows[1]["delta"] < rows[0]["delta"]
        assert all(r["within_bound"] for r in rows)

    def test_delta_needs_multi_plan(self):
        alpha = golden_alpha()
        plan = make_return_plan(alpha, 1.0, [1, 2])
        with pytest.raises(PlanError):
            delta_n(plan, make_dyadic_roof().truncate(8), alpha)


class TestCertificate:
    def test_single_frequency_passes(self):
        alpha, roof = _single_setup()
        plan = make_single_frequency_plan(alpha, [2, 3], 16.0)
        cert = weak_mixing_certificate(plan, roof, alpha, [16.0, 64.0, 256.0])
        assert cert.status == PASS
        integrals = [p.integral for c in cert.per_lambda for p in c.points]
        assert integrals
        assert min(integrals) >= 0.05

    def test_range_threshold(self):
        alpha, roof = _single_setup()
        plan = make_single_frequency_plan(alpha, [3], 16.0)
        threshold = range_threshold_lambda(plan, roof, alpha)
        assert threshold is not None
        assert threshold < 16.0
        cert = weak_mixing_certificate(plan, roof, alpha, [16.0]).per_lambda[0]
        assert cert.below_threshold == []
        assert replace(cert, lam=threshold / 2).below_threshold == [1]
        assert cert.to_dict()["below_threshold"] == []

    def test_range_threshold_empty_plan(self):
        alpha, roof = _single_setup()
        plan = make_single_frequency_plan(alpha, [3], 16.0)
        assert range_threshold_lambda(replace(plan, steps=[]), roof, alpha) is None

    def test_multi_frequency_pair(self):
        alpha, best = _multi_setup()
        plan = make_multi_frequency_plan(alpha, best, 16.0, variance_target=0.12, slack=0.5, start=2)
        cert = weak_mixing_certificate(plan, best.roof, alpha, [16.0, 64.0])
        assert cert.kind == "multi_frequency"
        assert cert.status != REFUTED
        for c in cert.per_lambda:
            assert len(c.points) + len(c.skipped) == 2
            assert len(c.ks) == len(c.points)
            assert all(0 <= p.integral <= 0.5 for p in c.points)


class TestGaussianNorm:
    def test_degenerate(self):
        assert gaussian_norm_expectation(0.3, 0.0) == pytest.approx(0.3)
        assert gaussian_norm_expectation(1.7, 0.0) == pytest.approx(0.3)

    def test_wide_is_uniform(self):
        assert gaussian_norm_expectation(0.1, 4.0) == pytest.approx(0.25, abs=1e-9)

    def test_branches_agree(self):
        below = gaussian_norm_expectation(0.2, 0.99)
        above = gaussian_norm_expectation(0.2, 1.01)
        assert below == pytest.approx(above, abs=1e-6)

    def test_narrow(self):
        assert gaussian_norm_expectation(0.3, 1e-8) == pytest.approx(0.3, abs=1e-3)

    def test_negative_variance(self):
        with pytest.raises(ValueError):
            gaussian_norm_expectation(0.3, -1.0)


class TestHelpers:
    def test_lambda_grid(self):
        assert lambda_grid(16, 256, 5) == pytest.approx([16, 32, 64, 128, 256])
        with pytest.raises(ValueError):
            lambda_grid(0.0)

    def test_equivalent_distances(self):
        assert equivalent_distances_check(10_000)["holds"]
