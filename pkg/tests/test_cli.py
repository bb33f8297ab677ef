import json

import pytest

from hardycabello.cli import (
    BoxParseError,
    build_parser,
    main,
    parse_box_text,
    read_config,
    resolve_config,
)
from hardycabello.scenarios import Argument, Principle

PR_TEXT = "0.5 0 0 0.5\n0.5 0 0 0.5\n0.5 0 0 0.5\n0 0.5 0.5 0\n"
UNIFORM_TEXT = "\n".join(["0.25 0.25 0.25 0.25"] * 4) + "\n"


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# --- verify ---------------------------------------------------------------------------

def test_verify_pr_box(tmp_path, capsys):
    f = tmp_path / "pr.txt"
    f.write_text(PR_TEXT)
    code, out, _ = run_cli(capsys, "verify", str(f), "--format", "json")
    assert code == 0
    rep = json.loads(out)
    assert rep["validity"]["valid"]
    assert rep["principles"]["IC"]["max"] == pytest.approx(1.0)
    assert rep["principles"]["ML"]["max"] == pytest.approx(3.141592653589793)
    assert rep["principles"]["LO"]["applicable"] and not rep["principles"]["LO"]["feasible"]


def test_verify_uniform_box(tmp_path, capsys):
    f = tmp_path / "u.json"
    f.write_text(json.dumps({"p": [[0.25] * 4] * 4}))
    code, out, _ = run_cli(capsys, "verify", str(f))
    assert code == 0
    assert "IC: satisfied" in out and "ML: satisfied" in out
    assert "LO: not applicable" in out


def test_verify_signaling_box_still_reports(tmp_path, capsys):
    f = tmp_path / "s.txt"
    f.write_text("0.5 0.5 0 0\n" + "0.25 0.25 0.25 0.25\n" * 3)
    code, out, _ = run_cli(capsys, "verify", str(f))
    assert code == 0
    assert "SIGNALING" in out and "IC:" in out and "ML:" in out


def test_verify_malformed_file(tmp_path, capsys):
    f = tmp_path / "bad.txt"
    f.write_text("0.25 0.25 0.25 0.25\n" * 3 + "0.25 0.25 0.25\n")
    code, _, err = run_cli(capsys, "verify", str(f))
    assert code != 0
    assert "expected 16 entries, found 15" in err and "line 4" in err


@pytest.mark.parametrize("text, line, column", [
    ("0.1 0.2 x 0.3", 1, 9),
    ("0.1\n0.2 0.3 abc", 2, 9),
    ("[0.1, 0.2,,]", 1, 11),
])
def test_parse_error_positions(text, line, column):
    with pytest.raises(BoxParseError) as info:
        parse_box_text(text)
    assert (info.value.line, info.value.column) == (line, column)


def test_parse_accepts_commas_and_comments():
    box = parse_box_text("# PR box\n" + PR_TEXT.replace(" ", ", "))
    assert box.prob(0, 0, 0, 0) == 0.5


# --- run / table / oracle ---------------------------------------------------------

def test_run_case_out_of_range_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["run", "--case", "17"])
    assert info.value.code == 2
    assert "case must be in 1..16" in capsys.readouterr().err


def test_run_single_case(capsys):
    code, out, _ = run_cli(capsys, "run", "--argument", "HNA", "--principle", "ML", "--case", "9",
                           "--starts", "8", "--format", "json")
    assert code == 0
    (row,) = json.loads(out)["rows"]
    assert row["value"] == pytest.approx(0.2, abs=1e-3)
    assert row["principle"] == "NS+ML" and row["locally_random"] == "0_A,0_B"


def test_oracle_subcommand_reports_gap(capsys):
    code, out, _ = run_cli(capsys, "oracle", "--argument", "HNA", "--principle", "IC", "--case", "16",
                           "--starts", "4", "--samples", "2000", "--format", "json")
    assert code == 0
    (row,) = json.loads(out)["rows"]
    assert row["oracle"]["source"] == "oracle"
    assert row["oracle_gap"] >= -1e-6


def test_table1_strict_and_output_file(tmp_path, capsys):
    out_file = tmp_path / "t1.md"
    code, _, _ = run_cli(capsys, "table", "1", "--starts", "8", "--out", str(out_file), "--strict")
    text = out_file.read_text()
    assert code == 0, text
    assert "| HNA |" in text and "flag" in text


def test_table_number_is_validated(capsys):
    with pytest.raises(SystemExit):
        main(["table", "5"])


# --- configuration ------------------------------------------------------------------

def test_config_file_and_flag_precedence(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("# defaults for a quick run\nstarts = 5\nseed = 9\nformat = csv\n"
                        "argument = CNA\nprinciple = IC,ML\ncase = 3,1\n")
    ns = build_parser().parse_args(["run", "--config", str(cfg_file), "--starts", "7"])
    cfg = resolve_config(ns)
    assert cfg.solver.starts == 7  # flag wins
    assert cfg.solver.seed == 9    # file beats default
    assert cfg.fmt == "csv"
    assert cfg.arguments == (Argument.CNA,)
    assert cfg.principles == (Principle.IC, Principle.ML)
    assert cfg.cases == (1, 3)
    assert cfg.solver.tol == 1e-8  # default


def test_config_rejects_unknown_keys(tmp_path):
    f = tmp_path / "bad.cfg"
    f.write_text("startz = 3\n")
    with pytest.raises(ValueError, match="unknown config key"):
        read_config(f)


def test_bad_config_value_exits_nonzero(tmp_path, capsys):
    f = tmp_path / "bad.cfg"
    f.write_text("starts = many\n")
    code, _, err = run_cli(capsys, "run", "--config", str(f))
    assert code == 1 and "bad value" in err


def test_selection_lists_and_ns_prefix():
    ns = build_parser().parse_args(["run", "--principle", "NS+IC,LO", "--argument", "hna"])
    cfg = resolve_config(ns)
    assert cfg.principles == (Principle.IC, Principle.LO)
    assert cfg.arguments == (Argument.HNA,)
