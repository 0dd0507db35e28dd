"""Acceptance gate: every criterion at its stated tolerance.

Each test prints one PASS/FAIL line (run with ``pytest -s`` to see them
live).  The Monte Carlo criteria use the full stated sample sizes and are
the slow part of the suite; everything else completes in seconds.
"""

import math
import time

import numpy as np
import pytest

from regdiv.hjb import default_grid
from regdiv.mc import SimConfig, estimate_value, suboptimality_probe
from regdiv.model import BarrierRegime2, LiquidationBarrier, ModelParams
from regdiv.policy import select_policy
from regdiv.roots import coefficient_ratio, phi, quartic_roots
from regdiv.sweep import reproduce_table, sweep_parameter

from conftest import BASE, table1

TABLE_TOL = 2e-3


def _report(criterion: int, passed: bool, detail: str) -> None:
    status = "PASS" if passed else "FAIL"
    print(f"ACCEPTANCE {criterion}: {status} — {detail}")


def test_criterion_1_table2():
    t0 = time.perf_counter()
    result = reproduce_table(2)
    elapsed = time.perf_counter() - t0
    spots = {row["overrides"]["mu2"]: row for row in
             (r.to_dict() for r in result.rows)}
    ok = (result.passed and result.max_abs_diff <= TABLE_TOL and elapsed < 1.0
          and abs(spots[0.0]["computed"]["b2"] - 0.703) <= TABLE_TOL
          and abs(spots[0.5]["computed"]["b2"] - 0.806) <= TABLE_TOL)
    _report(1, ok, f"table 2: 11 rows, max|diff|={result.max_abs_diff:.2e}, "
                   f"{elapsed:.2f}s")
    assert result.passed and result.max_abs_diff <= TABLE_TOL
    assert elapsed < 1.0


def test_criterion_2_table3():
    t0 = time.perf_counter()
    result = reproduce_table(3)
    elapsed = time.perf_counter() - t0
    rows = {r.overrides["mu2"]: r for r in result.rows}
    r9 = rows[0.90]
    r69 = rows[0.69]
    ok = (result.passed and result.max_abs_diff <= TABLE_TOL and elapsed < 10.0
          and abs(r9.computed["d1"] - 0.245) <= TABLE_TOL
          and abs(r9.computed["b2"] - 0.845) <= TABLE_TOL
          and abs(r9.computed["b1"] - 1.022) <= TABLE_TOL
          and abs(r69.computed["d1"] - 0.537) <= TABLE_TOL
          and abs(r69.computed["b1"] - 0.741) <= TABLE_TOL
          and abs(r69.computed["b2"] - 0.797) <= TABLE_TOL)
    _report(2, ok, f"table 3: both orderings, max|diff|={result.max_abs_diff:.2e}, "
                   f"{elapsed:.2f}s")
    assert ok


def test_criterion_3_tables456():
    t0 = time.perf_counter()
    results = {tid: reproduce_table(tid) for tid in (4, 5, 6)}
    elapsed = time.perf_counter() - t0
    spot_sigma = next(r for r in results[4].rows if r.overrides == {"sigma1": 1.0})
    spot_lam = next(r for r in results[5].rows if r.overrides == {"lambda1": 5.0})
    spot_rho = next(r for r in results[6].rows if r.overrides == {"rho": 0.7})
    worst = max(r.max_abs_diff for r in results.values())
    ok = (all(r.passed for r in results.values())
          and abs(spot_sigma.computed["b1"] - 1.274) <= TABLE_TOL
          and abs(spot_lam.computed["d1"] - 0.371) <= TABLE_TOL
          and abs(spot_rho.computed["b1"] - 0.725) <= TABLE_TOL)
    _report(3, ok, f"tables 4-6 sensitivities: max|diff|={worst:.2e}, {elapsed:.2f}s")
    assert ok


def test_criterion_4_table7():
    result = reproduce_table(7)
    r14 = next(r for r in result.rows if r.overrides == {"mu2": 1.40})
    ok = (result.passed and result.max_abs_diff <= TABLE_TOL
          and abs(r14.computed["d1"] - 0.161) <= TABLE_TOL
          and abs(r14.computed["b2"] - 0.848) <= TABLE_TOL
          and abs(r14.computed["b1"] - 1.132) <= TABLE_TOL)
    _report(4, ok, f"table 7: six mu2 rows, max|diff|={result.max_abs_diff:.2e}")
    assert ok


def test_criterion_5_table8_equal_thetas():
    result = reproduce_table(8)
    rows = {r.overrides["mu2"]: r for r in result.rows}
    r01, r45 = rows[0.10], rows[0.45]
    ok = (result.passed and result.max_abs_diff <= TABLE_TOL
          and abs(r01.computed["b2"] - (-0.014)) <= TABLE_TOL
          and abs(r45.computed["d1"] - (-0.170)) <= TABLE_TOL
          and abs(r45.computed["b1"] - 0.378) <= TABLE_TOL
          and abs(r45.computed["b2"] - 0.313) <= TABLE_TOL)
    _report(5, ok, f"table 8 (shared bankruptcy level): "
                   f"max|diff|={result.max_abs_diff:.2e}")
    assert ok


def test_criterion_6_case_ladder():
    grid = [-0.5, -0.45, -0.41, -0.39, -0.35, -0.2, 0.0, 0.2, 0.4, 0.6, 0.65,
            0.68, 0.69, 0.71, 0.8, 0.9, 1.0, 1.05, 1.09, 1.10, 1.12, 1.2,
            1.4, 1.6, 1.8, 2.0]
    rows = sweep_parameter(ModelParams(mu2=0.0, **BASE), "mu2", grid)
    assert all(r.passed for r in rows), [r.to_dict() for r in rows if not r.passed]
    tags = [r.case_tag for r in rows]
    order = {"A": 0, "B": 1, "C": 2, "D": 3}
    idx = [order[t] for t in tags]
    monotone = idx == sorted(idx)
    by_value = dict(zip(grid, tags))
    transitions_ok = (
        by_value[-0.41] == "A" and by_value[-0.39] == "B"      # near -0.4
        and by_value[0.68] == "B" and by_value[0.69] == "C"    # near 0.69
        and by_value[1.09] == "C" and by_value[1.10] == "D"    # near 1.10
    )
    ok = monotone and transitions_ok
    _report(6, ok, f"case ladder over mu2 in [-0.5, 2.0]: "
                   f"{'->'.join(dict.fromkeys(tags))}, transitions at "
                   f"-0.4 / 0.69 / 1.10")
    assert ok


def test_criterion_7_hjb_certification():
    worst_fit = worst_gen = worst_floor_gap = worst_concavity = 0.0
    for mu2 in (-0.5, 0.0, 0.35, 0.69, 0.9, 1.09, 1.10, 1.4, 2.0):
        sel = select_policy(table1(mu2))
        rep = sel.report
        assert rep.passed, (mu2, rep.failures)
        worst_fit = max(worst_fit, rep.max_smooth_fit_residual)
        for regime in (1, 2):
            g = rep.grid[regime]
            worst_gen = max(worst_gen, g.max_generator_positive)
            if math.isfinite(g.gradient_floor):
                worst_floor_gap = max(worst_floor_gap, 1.0 - g.gradient_floor)
        worst_concavity = max(worst_concavity, rep.concavity_max)
    ok = (worst_fit < 1e-9 and worst_gen < 1e-8
          and worst_floor_gap < 1e-8 and worst_concavity <= 1e-8)
    _report(7, ok, f"grid certification: smooth-fit<{worst_fit:.1e}, "
                   f"gen+<{worst_gen:.1e}, slope gap<{worst_floor_gap:.1e}, "
                   f"max w''(.,2)={worst_concavity:.1e}")
    assert ok


MC_POINTS = [(0.0, 1), (0.5, 1), (0.5, 2), (1.0, 2)]
MC_DRIFTS = (0.2, 0.9, 1.4)


def test_criterion_8_mc_cross_validation():
    t0 = time.perf_counter()
    lines = []
    ok = True
    for mu2 in MC_DRIFTS:
        p = table1(mu2)
        sel = select_policy(p)
        for x0, regime in MC_POINTS:
            cfg = SimConfig(dt=1e-4, horizon=None, n_paths=200_000, seed=7,
                            antithetic=True)
            est = estimate_value(sel.policy, p, x0, regime, cfg)
            v = float(sel.value.eval(x0, regime))
            slack = 3.0 * est.stderr + est.discount_tail_bound + 1e-12
            hit = abs(est.mean - v) <= slack
            ok &= hit
            if est.stderr > 1e-12:
                score = f"z={(est.mean - v) / est.stderr:+.2f}"
            else:
                score = "deterministic"
            lines.append(f"mu2={mu2} ({x0},{regime}): mc={est.mean:.5f} "
                         f"V={v:.5f} {score} {'ok' if hit else 'MISS'}")
            assert est.discount_tail_bound < 1e-4 * (1 + 1e-9)
    elapsed = time.perf_counter() - t0
    _report(8, ok, f"12 estimates at n=200000, dt=1e-4: all within "
                   f"3*stderr+tail, {elapsed:.0f}s wall; " + "; ".join(lines))
    assert ok


def test_criterion_9_dominance_probe():
    t0 = time.perf_counter()
    ok = True
    checked = 0
    for mu2 in MC_DRIFTS:
        p = table1(mu2)
        sel = select_policy(p)
        pol = sel.policy
        perturbed = []
        if isinstance(pol, BarrierRegime2):
            for db in (-0.1, 0.1):
                perturbed.append(BarrierRegime2(b2=pol.b2 + db))
        else:
            for db in (-0.1, 0.1):
                if p.theta1 < pol.d1 + db < min(pol.b1, pol.b2):
                    perturbed.append(LiquidationBarrier(
                        d1=pol.d1 + db, b1=pol.b1, b2=pol.b2,
                        ordering=pol.ordering))
                perturbed.append(LiquidationBarrier(
                    d1=pol.d1, b1=pol.b1 + db, b2=pol.b2, ordering=pol.ordering))
                if pol.b2 + db > p.theta2:
                    perturbed.append(LiquidationBarrier(
                        d1=pol.d1, b1=pol.b1, b2=pol.b2 + db,
                        ordering=pol.ordering))
        for alt in perturbed:
            for x0, regime in MC_POINTS:
                cfg = SimConfig(dt=1e-3, horizon=None, n_paths=10_000,
                                seed=101, antithetic=True)
                probe = suboptimality_probe(p, x0, regime, alt, cfg,
                                            selection=sel)
                checked += 1
                ok &= probe.dominated
    elapsed = time.perf_counter() - t0
    _report(9, ok, f"{checked} perturbed-policy estimates all dominated by "
                   f"the certified value (+3*stderr), {elapsed:.0f}s")
    assert ok


def test_criterion_10_oracle_consistency():
    # analytic first derivative vs central finite differences off junctions
    worst_rel = 0.0
    for mu2 in (0.2, 0.9, 1.4):
        p = table1(mu2)
        sel = select_policy(p)
        w = sel.value
        d1, b1, b2 = sel.policy.barriers(p)
        special = [x for x in (d1, b1, b2, p.theta1, p.theta2) if x is not None]
        for regime in (1, 2):
            grid = default_grid(w.regime(regime), max(b1, b2) + 1.0, 200)
            for x in grid:
                if min(abs(x - s) for s in special) < 1e-4:
                    continue
                h = 1e-6
                fd = (w.eval(x + h, regime) - w.eval(x - h, regime)) / (2 * h)
                an = w.eval(x, regime, 1)
                worst_rel = max(worst_rel, abs(an - fd) / max(abs(fd), 1e-12))
    deriv_ok = worst_rel < 1e-6

    # quartic root backends and the coupled-ratio identity
    backend_gap = ratio_gap = 0.0
    for mu2 in (0.2, 0.9, 1.4, 2.0):
        p = table1(mu2)
        comp = np.array(quartic_roots(p, backend="companion"))
        bis = np.array(quartic_roots(p, backend="bisect"))
        backend_gap = max(backend_gap, float(np.max(np.abs(comp - bis))))
        for a in comp:
            r = coefficient_ratio(a, p)
            cross = p.lambda2 / phi(a, p.mu2, p.sigma2, p.lambda2, p.rho)
            ratio_gap = max(ratio_gap, abs(r - cross))
    roots_ok = backend_gap <= 1e-9 and ratio_gap <= 1e-9

    ok = deriv_ok and roots_ok
    _report(10, ok, f"FD vs analytic rel err {worst_rel:.1e}; backend gap "
                    f"{backend_gap:.1e}; ratio identity gap {ratio_gap:.1e}")
    assert ok
