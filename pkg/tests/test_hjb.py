import json

import numpy as np
import pytest

from regdiv.case_ab import build_case_a, solve_case_b
from regdiv.case_cd import candidate_at_boundaries, solve_case
from regdiv.hjb import default_grid, evaluate, generator_residual, verify
from regdiv.model import Ordering

from conftest import table1


def _fd(w, x, regime, order, h=1e-6):
    """Central finite-difference oracle for the analytic derivatives."""
    if order == 1:
        return (w.eval(x + h, regime) - w.eval(x - h, regime)) / (2 * h)
    return (w.eval(x + h, regime) - 2 * w.eval(x, regime) + w.eval(x - h, regime)) / h**2


class TestEvaluate:
    def test_case_a_slope_is_one(self):
        p = table1(-0.5)
        w, _ = build_case_a(p)
        for x in (0.0, 0.7, 2.5):
            assert evaluate(w, x, 1, 1) == 1.0

    def test_case_b_curvature_vanishes_at_barrier(self):
        p = table1(0.2)
        sol = solve_case_b(p)
        assert sol.value.regime2.one_sided(sol.b2, 2, "left") == pytest.approx(
            0.0, abs=1e-10
        )
        assert evaluate(sol.value, sol.b2, 2, 2) == 0.0  # barrier segment is affine

    def test_derivatives_match_finite_differences(self):
        p = table1(0.9)
        sol = solve_case("C", Ordering.C_B2_LT_B1, p)
        w = sol.value
        pts = [0.0, 0.3, 0.5, 0.9, 1.2, 2.0]
        for regime in (1, 2):
            for x in pts:
                if abs(x - sol.d1) < 1e-3 or abs(x - sol.b1) < 1e-3 \
                        or abs(x - sol.b2) < 1e-3 or x <= p.theta(regime):
                    continue
                a1 = w.eval(x, regime, 1)
                assert a1 == pytest.approx(_fd(w, x, regime, 1),
                                           rel=1e-6, abs=1e-8)
                # second differences bottom out at eps/h^2 ~ 1e-4 roundoff
                a2 = w.eval(x, regime, 2)
                assert a2 == pytest.approx(_fd(w, x, regime, 2),
                                           rel=1e-3, abs=1e-3)

    def test_rejects_high_order(self):
        p = table1(-0.5)
        w, _ = build_case_a(p)
        with pytest.raises(ValueError):
            evaluate(w, 0.5, 1, 3)


class TestGeneratorResidual:
    def test_vanishes_in_case_b_continuation(self):
        p = table1(0.2)
        sol = solve_case_b(p)
        xs = np.linspace(p.theta2 + 1e-6, sol.b2 - 1e-6, 300)
        res = generator_residual(sol.value, xs, 2, p)
        assert np.max(np.abs(res)) < 1e-9

    def test_case_a_regime2_sign_matches_threshold(self):
        # (L - rho) w(x, 2) = mu2 - lam2 (theta1 - theta2) - rho (x - theta2)
        p = table1(-0.5)
        w, _ = build_case_a(p)
        for x in (0.3, 1.0, 4.0):
            got = generator_residual(w, x, 2, p)
            expected = p.mu2 - p.lambda2 * (p.theta1 - p.theta2) - p.rho * (x - p.theta2)
            assert got == pytest.approx(expected, abs=1e-12)
            assert got <= 0.0

    def test_case_c_grid_certification(self):
        p = table1(0.9)
        sol = solve_case("C", Ordering.C_B2_LT_B1, p)
        for regime in (1, 2):
            grid = default_grid(sol.value.regime(regime), 3.0, 10_000)
            res = generator_residual(sol.value, grid, regime, p)
            assert float(np.max(res)) < 1e-8


class TestVerify:
    def test_certifies_reference_case_c(self):
        p = table1(0.9)
        sol = solve_case("C", Ordering.C_B2_LT_B1, p)
        report = verify(sol.value, sol.policy, p)
        assert report.passed, report.failures
        assert report.max_smooth_fit_residual < 1e-9
        for regime in (1, 2):
            g = report.grid[regime]
            assert g.max_pointwise_hjb < 1e-8
            assert g.gradient_floor >= 1.0 - 1e-8
            assert g.min_slope >= -1e-10

    def test_perturbed_barrier_fails_with_smooth_fit_named(self):
        p = table1(0.9)
        sol = solve_case("C", Ordering.C_B2_LT_B1, p)
        cand = candidate_at_boundaries("C", sol.ordering, p,
                                       sol.d1, sol.b1 + 0.01, sol.b2)
        report = verify(cand.value, cand.policy, p)
        assert not report.passed
        assert any("smooth fit" in f for f in report.failures)

    def test_case_b_fails_beyond_its_range(self):
        p = table1(0.69)
        sol = solve_case_b(p)
        report = verify(sol.value, sol.policy, p)
        assert not report.passed
        assert report.condition_report is not None
        assert not report.condition_report.optimal
        assert report.condition_report.gh_at_x0 > 0.0

    def test_refinement_consistency(self):
        p = table1(0.9)
        sol = solve_case("C", Ordering.C_B2_LT_B1, p)
        coarse = verify(sol.value, sol.policy, p, grid_points=2000)
        fine = verify(sol.value, sol.policy, p, grid_points=20_000)
        assert coarse.passed == fine.passed is True
        assert fine.grid_points > coarse.grid_points

    def test_report_serializes(self):
        p = table1(0.2)
        sol = solve_case_b(p)
        report = verify(sol.value, sol.policy, p)
        blob = json.loads(report.to_json())
        assert blob["passed"] is True
        assert "smooth_fit" in blob and "grid" in blob

    def test_all_certified_cases_pass(self):
        for mu2 in (-0.5, 0.0, 0.35, 0.9, 1.4):
            from regdiv.policy import select_policy

            sel = select_policy(table1(mu2))
            assert sel.report.passed, (mu2, sel.report.failures)
