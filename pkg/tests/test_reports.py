import csv
import io
import json

import pytest

from hardycabello.reports import (
    CNA_LO_ALTERNATES,
    Cell,
    build_table,
    case_tolerance,
    load_reference,
    published_distance,
    rows_report,
)
from hardycabello.scenarios import Argument, CaseRow, Principle, case_lr


def fake_rows(value_for):
    rows = []
    for arg in Argument:
        for p in Principle:
            for case in range(1, 17):
                v = value_for(arg, p, case)
                rows.append(CaseRow(case, case_lr(case), p, arg, v, None if v is None else (0.0,),
                                    status="ok" if v is not None else "infeasible"))
    return rows


def published(arg, p, case):
    ref = load_reference()["table2" if arg is Argument.HNA else "table3"]
    return float(ref[p.value][case - 1])


def test_reference_file_shape():
    ref = load_reference()
    assert ref["version"]
    for name in ("table2", "table3"):
        for col in ("QM", "NS", "IC", "ML", "LO"):
            assert len(ref[name][col]) == 16
    assert ref["table1"]["CNA"]["LO"] == 0.2071
    assert ref["table3"]["LO"][15] == 0.1978


def test_published_values_pass_their_own_tables():
    rows = fake_rows(published)
    for n in (2, 3):
        assert build_table(n, rows).passed


def test_tolerances():
    assert case_tolerance("NS", 5) == 1e-6
    assert case_tolerance("ML", 6) == 0.01
    assert case_tolerance("ML", 8) == 0.005
    assert case_tolerance("IC", 2) == 0.005
    assert case_tolerance("NS", 5, "CNA", eps_q=1e-6) == pytest.approx(3e-6)
    assert case_tolerance("NS", 5, "CNA", eps_q=0.0) == 1e-6


def test_cell_statuses():
    assert Cell("IC", 0.2071, 0.2070, 0.005).status == "ok"
    assert Cell("IC", 0.2171, 0.2070, 0.005).status == "FAIL"
    assert Cell("LO", 0.2071, 0.1978, 0.003, alternates=CNA_LO_ALTERNATES).status == "flag"
    assert Cell("LO", 0.1900, 0.1978, 0.003, alternates=CNA_LO_ALTERNATES).status == "FAIL"
    assert Cell("QM", None, 0.09).status == "const"
    assert Cell("IC", None, 0.2, 0.005, infeasible=True).status == "infeasible"
    assert not Cell("IC", None, 0.2, 0.005, infeasible=True).passed


def test_table1_flags_cabello_lo():
    rows = fake_rows(lambda a, p, c: published(a, p, c) if c != 16 else
                     {"NS": 0.5, "IC": 0.2071, "ML": 0.206, "LO": 0.177 if a is Argument.HNA else 0.2071}[p.value])
    t = build_table(1, rows)
    statuses = {(r.label, c.column): c.status for r in t.rows for c in r.cells}
    assert statuses[("CNA", "NS+LO")] == "flag"
    assert statuses[("HNA", "NS+LO")] == "ok"
    assert statuses[("HNA", "LHVT")] == "const"
    assert t.passed


def test_table4_from_published_columns_is_close():
    for arg in Argument:
        for p in (Principle.IC, Principle.ML, Principle.LO):
            ref = load_reference()["table4"][arg.value][p.value]
            assert published_distance(arg, p) == pytest.approx(ref, abs=0.02)


def test_infeasible_row_is_flagged_not_dropped():
    rows = fake_rows(lambda a, p, c: None if (a, p, c) == (Argument.HNA, Principle.IC, 3) else published(a, p, c))
    t = build_table(2, rows)
    assert [(label, c.column, c.status) for label, c in t.failures] == [("3", "NS+IC", "infeasible")]
    assert "infeasible (ref 0.0020)" in t.render("markdown")


def test_renderings_are_stable_and_labelled():
    rows = fake_rows(published)
    t = build_table(3, rows)
    assert t.render("json") == t.render("json")
    data = json.loads(t.render("json"))
    cell = data["rows"][0]["cells"][1]
    assert cell["computed_source"] == "computed:CNA:NS:case1"
    assert cell["reference_source"] == "reference:table3:case1:NS"
    parsed = list(csv.reader(io.StringIO(t.render("csv"))))
    assert parsed[0][:3] == ["table", "row", "column"] and len(parsed) == 1 + 16 * 5
    assert t.render("markdown").startswith("## CNA")
    with pytest.raises(ValueError):
        t.render("xml")


def test_rows_report_formats():
    rows = fake_rows(published)[:3]
    assert json.loads(rows_report(rows, "json"))["rows"][0]["source"] == "computed"
    assert rows_report(rows, "csv").splitlines()[0].startswith("argument,principle,case")
    assert "| HNA | NS | 1 |" in rows_report(rows, "markdown")
