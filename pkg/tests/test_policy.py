import json

import numpy as np
import pytest

from regdiv.model import LiquidateBoth, LiquidationBarrier
from regdiv.policy import BANKRUPT, immediate_action, select_policy, value_at

from conftest import table1


class TestSelection:
    def test_deep_negative_drift_liquidates(self):
        sel = select_policy(table1(-0.5))
        assert sel.case_tag == "A"
        assert isinstance(sel.policy, LiquidateBoth)

    def test_small_drift_single_barrier(self):
        sel = select_policy(table1(0.2))
        assert sel.case_tag == "B"
        assert sel.policy.b2 == pytest.approx(0.780, abs=2e-3)

    def test_large_drift_liquidation_barrier(self):
        sel = select_policy(table1(1.2))
        assert sel.case_tag == "D"
        pol = sel.policy
        assert isinstance(pol, LiquidationBarrier)
        assert pol.d1 == pytest.approx(0.185, abs=2e-3)
        assert pol.b2 == pytest.approx(0.854, abs=2e-3)
        assert pol.b1 == pytest.approx(1.104, abs=2e-3)

    def test_threshold_tie_prefers_liquidation(self):
        sel = select_policy(table1(-0.4))  # exactly at the applicability edge
        assert sel.case_tag == "A"

    def test_rejected_candidates_leave_attempt_notes(self):
        sel = select_policy(table1(0.69))
        assert "B" in sel.attempts          # tried and rejected on the way to C
        assert "conditions" in sel.attempts["B"] or "(L-rho)w" in sel.attempts["B"]

    def test_selection_serializes(self):
        sel = select_policy(table1(0.9))
        blob = json.loads(sel.to_json())
        assert blob["case"] == "C"
        assert blob["policy"]["kind"] == "liquidation_barrier"
        assert blob["report"]["passed"] is True


class TestValueAt:
    def test_case_a_values(self):
        sel = select_policy(table1(-0.5))
        assert value_at(sel, 1.0, 1) == pytest.approx(1.2)
        assert value_at(sel, -0.2, 1) == 0.0
        assert value_at(sel, 0.2, 2) == 0.0

    def test_case_b_unit_slope_beyond_barrier(self):
        sel = select_policy(table1(0.2))
        b2 = sel.policy.b2
        v1 = value_at(sel, b2 + 0.3, 2)
        v0 = value_at(sel, b2, 2)
        assert v1 - v0 == pytest.approx(0.3, abs=1e-12)

    def test_nondecreasing_and_dominates_liquidation(self):
        for mu2 in (0.2, 0.9, 1.4):
            p = table1(mu2)
            sel = select_policy(p)
            xs = np.linspace(p.theta1 + 1e-9, 2.5, 400)
            v1 = sel.value.eval(xs, 1)
            v2 = sel.value.eval(xs, 2)
            assert np.all(np.diff(v1) >= -1e-12)
            assert np.all(np.diff(v2) >= -1e-12)
            assert np.all(v1 >= (xs - p.theta1) - 1e-9)
            mask = xs > p.theta2
            assert np.all(v2[mask] >= (xs[mask] - p.theta2) - 1e-9)


class TestImmediateAction:
    def test_liquidation_zone(self):
        p = table1(0.9)
        sel = select_policy(p)
        act = immediate_action(sel, 0.2, 1)   # 0.2 <= d1 = 0.245
        assert act.payout == pytest.approx(0.4, abs=2e-3 + 1e-12)
        assert act.resulting_state == BANKRUPT

    def test_barrier_overflow(self):
        p = table1(0.9)
        sel = select_policy(p)
        b1 = sel.policy.b1
        act = immediate_action(sel, 1.5, 1)
        assert act.payout == pytest.approx(1.5 - b1, abs=1e-12)
        assert act.resulting_state == pytest.approx(b1)

    def test_continuation_region_does_nothing(self):
        p = table1(0.9)
        sel = select_policy(p)
        act = immediate_action(sel, 0.5, 2)
        assert act.payout == 0.0
        assert act.resulting_state == pytest.approx(0.5)

    def test_bankrupt_state_pays_nothing(self):
        p = table1(0.9)
        sel = select_policy(p)
        act = immediate_action(sel, p.theta2 - 0.05, 2)
        assert act.payout == 0.0 and act.resulting_state == BANKRUPT

    def test_case_b_regime1_liquidates_everything(self):
        p = table1(0.2)
        sel = select_policy(p)
        act = immediate_action(sel, 0.7, 1)
        assert act.payout == pytest.approx(0.9)
        assert act.resulting_state == BANKRUPT


class TestCaseLadder:
    def test_partition_and_monotone_case_index(self):
        order = {"A": 0, "B": 1, "C": 2, "D": 3}
        tags = []
        for mu2 in (-0.5, -0.2, 0.3, 0.69, 0.9, 1.2, 1.8):
            tags.append(select_policy(table1(mu2)).case_tag)
        indices = [order[t] for t in tags]
        assert indices == sorted(indices)
        assert tags[0] == "A" and tags[-1] == "D"
