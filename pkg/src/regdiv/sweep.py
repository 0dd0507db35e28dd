"""Parameter sweeps, reference-table regression, and figure data export.

Sweeps drive the case dispatcher across a parameter grid with optional warm
starting (each row seeds the liquidation-barrier solver with the previous
row's boundaries).  The reference tables bundled with the package pin every
reference boundary value at 3 decimals; ``reproduce_table`` recomputes them
and reports absolute differences against a 2e-3 gate.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Optional, Sequence

import numpy as np

from .conditions import gh_function
from .mc import SimConfig, simulate_path
from ._rng import PathRNG
from .model import LiquidationBarrier, ModelError, ModelParams, validate
from .policy import NoVerifiedCase, Selection, select_policy

__all__ = [
    "SweepRow",
    "TableRowResult",
    "TableResult",
    "load_reference_tables",
    "sweep_parameter",
    "reproduce_table",
    "emit_figure_data",
    "rows_to_csv",
]


def load_reference_tables() -> dict:
    path = resources.files("regdiv").joinpath("data/reference_tables.json")
    with path.open() as fh:
        return json.load(fh)


@dataclass(frozen=True)
class SweepRow:
    value: float
    case_tag: Optional[str]
    d1: Optional[float]
    b1: Optional[float]
    b2: Optional[float]
    passed: bool
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return self.__dict__.copy()


def _boundaries(sel: Selection, params: ModelParams):
    d1, b1, b2 = sel.policy.barriers(params)
    return d1, b1, b2


def sweep_parameter(params: ModelParams, param_name: str, values: Sequence[float],
                    warm_start: bool = True, allow_equal_thetas: bool = False,
                    grid_points: int = 4000) -> list[SweepRow]:
    """One dispatch per grid value; failed rows are recorded, not dropped."""
    rows: list[SweepRow] = []
    hint = None
    for v in values:
        try:
            p = validate(params.replace(**{param_name: float(v)}),
                         allow_equal_thetas=allow_equal_thetas)
        except ModelError as exc:
            rows.append(SweepRow(float(v), None, None, None, None, False, str(exc)))
            continue
        hints = {}
        if warm_start and hint is not None:
            hints = {hint[0]: hint[1]}
        try:
            sel = select_policy(p, grid_points=grid_points, seed_hints=hints)
        except NoVerifiedCase as exc:
            rows.append(SweepRow(float(v), None, None, None, None, False,
                                 "; ".join(f"{k}: {a}" for k, a in exc.attempts.items())))
            hint = None
            continue
        d1, b1, b2 = _boundaries(sel, p)
        rows.append(SweepRow(float(v), sel.case_tag, d1, b1, b2, sel.report.passed))
        if warm_start and isinstance(sel.policy, LiquidationBarrier):
            hint = (sel.policy.ordering, (sel.policy.d1, sel.policy.b1, sel.policy.b2))
        else:
            hint = None
    return rows


@dataclass(frozen=True)
class TableRowResult:
    overrides: dict
    expected: dict
    computed: dict
    diffs: dict
    case_expected: str
    case_computed: Optional[str]
    passed: bool
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return self.__dict__.copy()


@dataclass(frozen=True)
class TableResult:
    table_id: int
    tolerance: float
    rows: tuple[TableRowResult, ...]
    max_abs_diff: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "table": self.table_id,
            "tolerance": self.tolerance,
            "max_abs_diff": self.max_abs_diff,
            "passed": self.passed,
            "rows": [r.to_dict() for r in self.rows],
        }


def reproduce_table(table_id: int, base: Optional[ModelParams] = None,
                    grid_points: int = 4000) -> TableResult:
    """Recompute one reference table and diff against the pinned values."""
    ref = load_reference_tables()
    key = str(table_id)
    if key not in ref["tables"]:
        raise KeyError(f"no reference table {table_id}; have {sorted(ref['tables'])}")
    sheet = ref["tables"][key]
    tol = float(ref["tolerance"])
    if base is None:
        base_fields = {k: v for k, v in ref["base"].items() if v is not None}
        base_fields.setdefault("mu2", 0.0)
        base = ModelParams(**base_fields)
    allow_eq = bool(sheet["allow_equal_thetas"])
    base = base.replace(**sheet["base_overrides"])

    results = []
    worst = 0.0
    hint = None
    for row in sheet["rows"]:
        overrides = row["overrides"]
        expected = {k: row[k] for k in ("d1", "b1", "b2") if k in row}
        try:
            p = validate(base.replace(**overrides), allow_equal_thetas=allow_eq)
            hints = {hint[0]: hint[1]} if hint is not None else {}
            sel = select_policy(p, grid_points=grid_points, seed_hints=hints)
        except ModelError as exc:
            results.append(TableRowResult(overrides, expected, {}, {},
                                          row["case"], None, False, str(exc)))
            worst = float("inf")
            hint = None
            continue
        d1, b1, b2 = _boundaries(sel, p)
        computed = {"d1": d1, "b1": b1, "b2": b2}
        diffs = {k: abs(computed[k] - expected[k])
                 for k in expected if computed[k] is not None}
        row_worst = max(diffs.values(), default=float("inf") if expected else 0.0)
        ok = (sel.case_tag == row["case"] and len(diffs) == len(expected)
              and row_worst <= tol and sel.report.passed)
        results.append(TableRowResult(
            overrides, expected,
            {k: v for k, v in computed.items() if v is not None},
            diffs, row["case"], sel.case_tag, ok,
        ))
        worst = max(worst, row_worst)
        if isinstance(sel.policy, LiquidationBarrier):
            hint = (sel.policy.ordering, (sel.policy.d1, sel.policy.b1, sel.policy.b2))
        else:
            hint = None
    return TableResult(
        table_id=int(table_id), tolerance=tol, rows=tuple(results),
        max_abs_diff=worst, passed=all(r.passed for r in results),
    )


def _linspace(lo: float, hi: float, n: int) -> np.ndarray:
    return np.linspace(lo, hi, n)


def emit_figure_data(kind: str, params: ModelParams, *,
                     x_max: Optional[float] = None, n_points: int = 400,
                     x0: float = 0.5, regime0: int = 2, seed: int = 0,
                     dt: float = 1e-3, horizon: float = 10.0,
                     param_name: str = "mu2",
                     param_values: Optional[Sequence[float]] = None,
                     allow_equal_thetas: bool = False) -> tuple[list[str], list[tuple]]:
    """Plottable columns for the standard figure families.

    Returns (header, rows).  ``kind`` is one of ``value_function``,
    ``condition_function_G``, ``condition_function_H``, ``sample_path``,
    ``barrier_vs_param``.
    """
    if kind == "barrier_vs_param":
        if param_values is None:
            raise ValueError("barrier_vs_param needs param_values")
        rows = sweep_parameter(params, param_name, param_values,
                               allow_equal_thetas=allow_equal_thetas)
        return (
            [param_name, "case", "d1", "b1", "b2", "passed"],
            [(r.value, r.case_tag, r.d1, r.b1, r.b2, r.passed) for r in rows],
        )

    p = validate(params, allow_equal_thetas=allow_equal_thetas)

    if kind == "condition_function_G":
        # G certifies (or refutes) the single-barrier candidate, so it is
        # always computed on the case-B solve even when a richer case wins
        from .case_ab import solve_case_b

        sol = solve_case_b(p)
        xs = _linspace(p.theta2 + 1e-9, sol.b2, n_points)
        g = gh_function(sol.value, p, xs)
        return ["x", "value"], list(zip(xs.tolist(), np.asarray(g).tolist()))

    sel = select_policy(p)
    d1, b1, b2 = _boundaries(sel, p)
    top = max(b1, b2)

    if kind == "value_function":
        hi = x_max if x_max is not None else top + 1.0
        xs = _linspace(p.theta1, hi, n_points)
        v1 = sel.value.eval(xs, 1)
        v2 = sel.value.eval(xs, 2)
        return ["x", "V1", "V2"], list(zip(xs.tolist(), v1.tolist(), v2.tolist()))

    if kind == "condition_function_H":
        if d1 is None:
            raise ValueError("condition_function_H needs a liquidation-barrier case")
        xs = _linspace(p.theta2 + 1e-9, d1, n_points)
        g = gh_function(sel.value, p, xs)
        return ["x", "value"], list(zip(xs.tolist(), np.asarray(g).tolist()))

    if kind == "sample_path":
        trace: list[tuple] = []
        simulate_path(sel.policy, p, x0, regime0,
                      SimConfig(dt=dt, horizon=horizon, n_paths=1, seed=seed),
                      PathRNG(seed, 0), trace=trace)
        return ["t", "regime", "X", "cumulative_dividends"], trace

    raise ValueError(f"unknown figure kind {kind!r}")


def rows_to_csv(header: Iterable[str], rows: Iterable[tuple]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()
