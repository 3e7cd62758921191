"""Recompute the published reference values and compare them with the bundled ones."""
from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

from .analysis import analyze
from .foundation import TwoArmData
from .operating import OcScenario, SampleSizeSpec, fm_sample_size, summarize_type1, table_sweep
from .reference import TABLE3, TABLE4, TYPE1_COLUMNS, Type1Row, attributed_rows, consistent_rows

__all__ = ["Check", "design_size", "check_table4", "check_type1_rows", "check_table3", "type1_values", "summary_designs"]

PP_TOL = 0.01  # percentage points
P_TOL = 0.00005  # printed 4-decimal p-values
SUMMARY_TOL = 0.02
_EPS = 1e-9


@dataclass(frozen=True)
class Check:
    where: str
    quantity: str
    expected: float | None
    actual: float | None
    tol: float

    @property
    def ok(self) -> bool:
        if self.expected is None or self.actual is None:
            return self.expected is None and self.actual is None
        return abs(self.actual - self.expected) <= self.tol + _EPS

    def line(self) -> str:
        def fmt(v):
            return "--" if v is None else f"{v:.4f}"
        status = "ok  " if self.ok else "DIFF"
        return f"{status} {self.where:<32} {self.quantity:<12} expected {fmt(self.expected)}  got {fmt(self.actual)}"


def design_size(row: Type1Row) -> tuple[int, int]:
    """Sample sizes of the design a row is labelled with (FM, nearest rounding)."""
    spec = SampleSizeSpec(row.margin, row.p_control, power=row.power, allocation=row.allocation)
    return fm_sample_size(spec, rounding="nearest")


def check_table4(methods=None) -> list[Check]:
    out = []
    for ex in TABLE4:
        wanted = list(ex.intervals) if methods is None else [m for m in ex.intervals if m in methods]
        results = {r.method: r for r in analyze(TwoArmData.from_counts(*ex.counts), ex.margin,
                                                methods=wanted)}
        for m in wanted:
            r = results[m]
            for k, name in enumerate(("lower", "upper")):
                out.append(Check(f"{ex.name} {m}", name, ex.intervals[m][k],
                                 100 * tuple(r.interval)[k], PP_TOL))
            if m in ex.p_values:
                out.append(Check(f"{ex.name} {m}", "p-value", ex.p_values[m], r.p_value, P_TOL))
    return out


def _scenario(row: Type1Row, at_design: bool) -> OcScenario:
    nt, nc = design_size(row) if at_design else (row.n_test, row.n_control)
    return OcScenario(nt, nc, row.margin, row.p_control)


def type1_values(rows, jobs: int = 1, als_bias_correction: bool = False,
                 at_design: bool = False) -> list[dict]:
    """Type I errors in percent for each row, keyed by the printed column names.

    ``at_design`` evaluates each row at the sample size of its labelled design
    rather than the printed one.
    """
    methods = tuple("als_mn" if (m == "als" and als_bias_correction) else m for m in TYPE1_COLUMNS)
    raw = table_sweep([_scenario(r, at_design) for r in rows], methods, jobs=jobs)
    return [{col: 100 * v[m] for col, m in zip(TYPE1_COLUMNS, methods)} for v in raw]


def check_type1_rows(rows=None, jobs: int = 1, als_bias_correction: bool = False,
                     methods=TYPE1_COLUMNS) -> list[Check]:
    rows = consistent_rows() if rows is None else rows
    out = []
    for row, got in zip(rows, type1_values(rows, jobs, als_bias_correction)):
        for m in methods:
            out.append(Check(row.label, m, row.values[m], got[m], PP_TOL))
    return out


_SUMMARY_KEYS = ("pct_above", "mean_distance", "range", "min", "max", "mean_at_or_below", "mean_above")


def summary_designs() -> list[Type1Row]:
    """The distinct designs whose type I errors the printed tables actually carry."""
    out = []
    for r in attributed_rows():
        if r not in out:
            out.append(r)
    return out


def check_table3(jobs: int = 1, als_bias_correction: bool = False,
                 methods=("als", "els"), keys=("pct_above", "mean_distance", "min", "max")):
    """Summary statistics recomputed over the printed designs.

    Type I errors are rounded to two decimals, as printed, before summarizing,
    and the share above nominal is compared at its printed (integer) precision.
    Returns ``(checks, summaries)``; the summaries are in percent.
    """
    values = type1_values(summary_designs(), jobs, als_bias_correction)
    summaries = {m: summarize_type1([round(v[m], 2) for v in values], nominal=2.5)
                 for m in TYPE1_COLUMNS}
    out = []
    for m in methods:
        printed = dict(zip(_SUMMARY_KEYS, TABLE3[m]))
        for k in keys:
            got = summaries[m][k]
            if k == "pct_above":
                got = float(Decimal(repr(got)).quantize(Decimal(1), rounding=ROUND_HALF_UP))
            out.append(Check(f"summary {m}", k, printed[k], got, SUMMARY_TOL))
    return out, summaries
