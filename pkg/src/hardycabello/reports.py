"""Computed-versus-reference tables rendered as markdown, CSV or JSON.

Every numeric cell carries where it came from: ``computed:...`` for solver
rows, ``reference:...`` for bundled published constants.  Rendering is a pure
function of the inputs, so identical runs give identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Optional, Sequence

from .scenarios import CASES, DEFAULT_EPS_Q, Argument, CaseRow, Principle, euclidean_distance

FORMATS = ("markdown", "csv", "json")

TABLE1_TOL = 0.003
CASE_TOL = 0.005
ML_SYMMETRIC_TOL = 0.01
ML_SYMMETRIC_CASES = (2, 4, 6, 7)
NS_TOL = 1e-6
TABLE4_TOL = 0.02
# CNA under NS+LO without local randomness is printed as 0.2071 in the summary
# table and as 0.1978 in the per-case table; either is accepted and flagged.
CNA_LO_ALTERNATES = (0.2071, 0.1978)

PRINCIPLE_COLUMNS = ("NS", "IC", "ML", "LO")


@lru_cache(maxsize=1)
def _reference_text() -> str:
    return resources.files("hardycabello").joinpath("data/reference.json").read_text()


def load_reference() -> dict:
    """Bundled published values (a fresh copy on every call)."""
    return json.loads(_reference_text())


def reference_case_table(argument) -> str:
    return "table2" if Argument(argument) is Argument.HNA else "table3"


def case_tolerance(principle, case_index: int, argument=Argument.HNA,
                   eps_q: float = DEFAULT_EPS_Q) -> float:
    """Allowed |computed - reference| for one per-case cell.

    Requiring q1 >= eps_q lowers the CNA optimum by up to 2 * eps_q (moving
    mass from c6 to c11 raises q1 at half the rate it lowers the objective),
    so the CNA NS tolerance absorbs that shift.
    """
    principle = Principle(principle)
    if principle is Principle.NS:
        return NS_TOL + (2 * eps_q if Argument(argument) is Argument.CNA else 0.0)
    if principle is Principle.ML and case_index in ML_SYMMETRIC_CASES:
        return ML_SYMMETRIC_TOL
    return CASE_TOL


@dataclass(frozen=True)
class Cell:
    column: str
    computed: Optional[float]
    reference: Optional[float]
    tolerance: Optional[float] = None
    computed_source: str = ""
    reference_source: str = ""
    alternates: tuple = ()
    note: str = ""
    infeasible: bool = False

    @property
    def delta(self) -> Optional[float]:
        if self.computed is None or self.reference is None:
            return None
        return self.computed - self.reference

    @property
    def status(self) -> str:
        if self.tolerance is None:
            return "const" if self.computed is None else "info"
        if self.computed is None:
            return "infeasible" if self.infeasible else "missing"
        if abs(self.computed - self.reference) <= self.tolerance:
            return "flag" if self.alternates else "ok"
        if any(abs(self.computed - alt) <= self.tolerance for alt in self.alternates):
            return "flag"
        return "FAIL"

    @property
    def passed(self) -> bool:
        return self.status in ("ok", "flag", "const", "info")

    def to_dict(self) -> dict:
        out = {
            "column": self.column,
            "computed": self.computed,
            "computed_source": self.computed_source or None,
            "reference": self.reference,
            "reference_source": self.reference_source or None,
            "delta": self.delta,
            "tolerance": self.tolerance,
            "status": self.status,
        }
        if self.alternates:
            out["accepted_alternates"] = list(self.alternates)
        if self.note:
            out["note"] = self.note
        return out


@dataclass(frozen=True)
class Row:
    label: str
    cells: tuple
    detail: str = ""


@dataclass(frozen=True)
class TableReport:
    name: str
    title: str
    row_header: str
    rows: tuple
    notes: tuple = field(default=())

    @property
    def cells(self):
        return [c for r in self.rows for c in r.cells]

    @property
    def failures(self) -> list:
        return [(r.label, c) for r in self.rows for c in r.cells if not c.passed]

    @property
    def passed(self) -> bool:
        return not self.failures

    def columns(self) -> list:
        seen = []
        for r in self.rows:
            for c in r.cells:
                if c.column not in seen:
                    seen.append(c.column)
        return seen

    def render(self, fmt: str = "markdown") -> str:
        if fmt == "markdown":
            return _markdown(self)
        if fmt == "csv":
            return _csv(self)
        if fmt == "json":
            return json.dumps(self.to_dict(), indent=2) + "\n"
        raise ValueError(f"format must be one of {FORMATS}")

    def to_dict(self) -> dict:
        return {
            "table": self.name,
            "title": self.title,
            "passed": self.passed,
            "rows": [
                {"label": r.label, **({"detail": r.detail} if r.detail else {}),
                 "cells": [c.to_dict() for c in r.cells]}
                for r in self.rows
            ],
            "notes": list(self.notes),
        }


def _fmt(v: Optional[float], digits: int = 4) -> str:
    return "-" if v is None else f"{v:.{digits}f}"


def _fmt_delta(v: Optional[float]) -> str:
    return "" if v is None else f"{v:+.4f}"


def _cell_text(c: Cell) -> str:
    if c.status == "const":
        return _fmt(c.reference)
    if c.computed is None:
        return f"{c.status} (ref {_fmt(c.reference)})"
    if c.reference is None:
        return _fmt(c.computed)
    text = f"{_fmt(c.computed)} (ref {_fmt(c.reference)}, {_fmt_delta(c.delta)})"
    if c.status in ("FAIL", "flag"):
        text += f" {c.status}"
    return text


def _markdown(t: TableReport) -> str:
    cols = t.columns()
    lines = [f"## {t.title}", "", "| " + " | ".join([t.row_header] + cols) + " |",
             "|" + "---|" * (len(cols) + 1)]
    for r in t.rows:
        by_col = {c.column: c for c in r.cells}
        label = f"{r.label} {r.detail}".strip()
        lines.append("| " + " | ".join([label] + [
            _cell_text(by_col[c]) if c in by_col else "" for c in cols]) + " |")
    lines.append("")
    lines.append(f"Result: {'PASS' if t.passed else 'FAIL'} "
                 f"({len(t.failures)} cell(s) outside tolerance)")
    for note in t.notes:
        lines.append(f"- {note}")
    return "\n".join(lines) + "\n"


def _csv(t: TableReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["table", "row", "column", "computed", "reference", "delta", "tolerance",
                "status", "computed_source", "reference_source"])
    for r in t.rows:
        for c in r.cells:
            w.writerow([t.name, r.label, c.column,
                        "" if c.computed is None else repr(c.computed),
                        "" if c.reference is None else repr(c.reference),
                        "" if c.delta is None else repr(c.delta),
                        "" if c.tolerance is None else repr(c.tolerance),
                        c.status, c.computed_source, c.reference_source])
    return buf.getvalue()


def _index(rows: Sequence[CaseRow]) -> dict:
    return {(r.argument, r.principle, r.case_index): r for r in rows}


def _computed_cell(column, row: Optional[CaseRow], reference, tol, ref_source, **kw) -> Cell:
    if row is None:
        return Cell(column, None, reference, tol, "", ref_source, **kw)
    source = f"computed:{row.argument.value}:{row.principle.value}:case{row.case_index}"
    return Cell(column, row.value, reference, tol, source, ref_source,
                infeasible=not row.ok, **kw)


def table1(rows: Sequence[CaseRow]) -> TableReport:
    """Maxima without local randomness (case 16) for both arguments."""
    ref = load_reference()["table1"]
    idx = _index(rows)
    out = []
    for arg in Argument:
        cells = [Cell("LHVT", None, 0.0, reference_source="constant:local models"),
                 Cell("QM", None, float(ref[arg.value]["QM"]),
                      reference_source=f"reference:table1:{arg.value}:QM")]
        for p in Principle:
            kw = {}
            if arg is Argument.CNA and p is Principle.LO:
                kw = dict(alternates=CNA_LO_ALTERNATES,
                          note="published maxima disagree (0.2071 summary vs 0.1978 per case)")
            cells.append(_computed_cell(p.label, idx.get((arg, p, 16)), float(ref[arg.value][p.value]),
                                        TABLE1_TOL, f"reference:table1:{arg.value}:{p.value}", **kw))
        out.append(Row(arg.value, tuple(cells)))
    return TableReport("table1", "Maximum success probability without local randomness",
                       "Argument", tuple(out),
                       notes=("CNA NS+LO is accepted against either published value and flagged",))


def case_table(argument, rows: Sequence[CaseRow], eps_q: float = DEFAULT_EPS_Q) -> TableReport:
    """Per-case maxima under each principle for one argument."""
    argument = Argument(argument)
    name = reference_case_table(argument)
    ref = load_reference()[name]
    idx = _index(rows)
    out = []
    for case in range(1, len(CASES) + 1):
        cells = [Cell("QM", None, float(ref["QM"][case - 1]),
                      reference_source=f"reference:{name}:case{case}:QM")]
        for p in Principle:
            kw = {}
            if argument is Argument.CNA and p is Principle.LO and case == 16:
                kw = dict(alternates=CNA_LO_ALTERNATES,
                          note="published maxima disagree (0.2071 summary vs 0.1978 per case)")
            cells.append(_computed_cell(
                p.label, idx.get((argument, p, case)), float(ref[p.value][case - 1]),
                case_tolerance(p, case, argument, eps_q), f"reference:{name}:case{case}:{p.value}", **kw))
        out.append(Row(str(case), tuple(cells), detail=f"[{CASES[case - 1].label}]"))
    return TableReport(name, f"{argument.value} maximum per locally random input set", "Case",
                       tuple(out), notes=(
                           f"tolerance {CASE_TOL} (ML cases {', '.join(map(str, ML_SYMMETRIC_CASES))}: "
                           f"{ML_SYMMETRIC_TOL}; NS: {case_tolerance(Principle.NS, 1, argument, eps_q):g})",))


def principle_distance(argument, principle, rows: Sequence[CaseRow]) -> Optional[float]:
    """Distance between a computed principle column and the published QM column."""
    argument, principle = Argument(argument), Principle(principle)
    idx = _index(rows)
    qm = load_reference()[reference_case_table(argument)]["QM"]
    values = [idx.get((argument, principle, c)) for c in range(1, len(CASES) + 1)]
    if any(r is None or r.value is None for r in values):
        return None
    return euclidean_distance([r.value for r in values], qm)


def published_distance(argument, principle) -> float:
    """Same distance using the published principle column instead of computed values."""
    table = load_reference()[reference_case_table(argument)]
    return euclidean_distance(table[Principle(principle).value], table["QM"])


def table4(rows: Sequence[CaseRow]) -> TableReport:
    ref = load_reference()["table4"]
    out = []
    for arg in Argument:
        cells = []
        for p in (Principle.IC, Principle.ML, Principle.LO):
            cells.append(Cell(
                f"d({p.label},QM)", principle_distance(arg, p, rows), float(ref[arg.value][p.value]),
                TABLE4_TOL, f"computed:{arg.value}:{p.value}:cases1-16 vs reference QM column",
                f"reference:table4:{arg.value}:{p.value}"))
        out.append(Row(arg.value, tuple(cells)))
    return TableReport("table4", "Euclidean distance of principle columns from the QM column",
                       "Argument", tuple(out))


def build_table(n: int, rows: Sequence[CaseRow], eps_q: float = DEFAULT_EPS_Q) -> TableReport:
    if n == 1:
        return table1(rows)
    if n == 2:
        return case_table(Argument.HNA, rows, eps_q)
    if n == 3:
        return case_table(Argument.CNA, rows, eps_q)
    if n == 4:
        return table4(rows)
    raise ValueError("table number must be 1, 2, 3 or 4")


def rows_report(rows: Sequence[CaseRow], fmt: str = "markdown", oracle: Optional[dict] = None) -> str:
    """Plain listing of solver rows, optionally with oracle lower bounds.

    ``oracle`` maps ``(argument, principle, case_index)`` to an OracleResult.
    """
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    records = []
    for r in rows:
        rec = r.to_dict()
        if oracle is not None:
            o = oracle.get((r.argument, r.principle, r.case_index))
            rec["oracle"] = None if o is None else o.to_dict()
            rec["oracle_gap"] = (None if o is None or o.best_value is None or r.value is None
                                 else r.value - o.best_value)
        records.append(rec)
    if fmt == "json":
        return json.dumps({"rows": records}, indent=2) + "\n"
    header = ["argument", "principle", "case", "locally_random", "value", "status", "validated",
              "max_ineq_residual"]
    if oracle is not None:
        header += ["oracle", "oracle_gap"]

    def cell(rec, key):
        v = rec[key]
        if key == "oracle":
            return "none found" if v is None or v["best_value"] is None else f"{v['best_value']:.6f}"
        if key == "value":
            return "-" if v is None else f"{v:.6f}"
        if key in ("max_ineq_residual", "oracle_gap"):
            return "-" if v is None else f"{v:.2e}"
        return str(v)

    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for rec in records:
            w.writerow([cell(rec, k) for k in header])
        return buf.getvalue()
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(cell(rec, k) for k in header) + " |" for rec in records]
    return "\n".join(lines) + "\n"
