"""Command-line front end: tables, single runs, oracle comparisons, box checks."""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import math
import re
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .boxes import JointBox, check_box, marginals, to_ns_params
from .oracle import sample_max
from .optimizer import SolverConfig
from .principles import ic_residuals, lo_residuals_from_params, ml_residual
from .reports import FORMATS, build_table, rows_report
from .scenarios import (
    CASES,
    DEFAULT_EPS_Q,
    LR_ROW_CONVENTIONS,
    Argument,
    Principle,
    case_lr,
    run_suite,
)

log = logging.getLogger("hardycabello")

DEFAULT_SAMPLES = 100_000
ZERO_TOL = 1e-12


class BoxParseError(ValueError):
    def __init__(self, message, line, column):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class RunConfig:
    arguments: tuple = tuple(Argument)
    principles: tuple = tuple(Principle)
    cases: tuple = tuple(range(1, len(CASES) + 1))
    solver: SolverConfig = SolverConfig()
    oracle_samples: int = DEFAULT_SAMPLES
    fmt: str = "markdown"
    out: Optional[str] = None
    eps_q: float = DEFAULT_EPS_Q
    lr_rows: str = "published"
    workers: int = 1

    def __post_init__(self):
        if not (self.arguments and self.principles and self.cases):
            raise ValueError("argument, principle and case selections must be non-empty")
        if self.fmt not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}")


# --- option parsing ----------------------------------------------------------

def _case_index(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid case {text!r}") from None
    if not 1 <= value <= len(CASES):
        raise argparse.ArgumentTypeError(f"case must be in 1..{len(CASES)}, got {value}")
    return value


def _choice_list(enum_cls):
    def parse(text: str):
        out = []
        for token in text.split(","):
            token = token.strip().upper()
            if token.startswith("NS+"):
                token = token[3:]
            try:
                out.append(enum_cls(token))
            except ValueError:
                names = ", ".join(e.value for e in enum_cls)
                raise argparse.ArgumentTypeError(f"unknown value {token!r} (choose from {names})")
        return out
    return parse


def _add_selection(p):
    p.add_argument("--argument", action="append", type=_choice_list(Argument),
                   help="HNA, CNA or a comma list (repeatable; default both)")
    p.add_argument("--principle", action="append", type=_choice_list(Principle),
                   help="NS, IC, ML, LO or a comma list (repeatable; default all)")
    p.add_argument("--case", action="append", type=_case_index,
                   help="case index 1..16 (repeatable; default all)")


def _add_common(p, samples=False):
    p.add_argument("--starts", type=int, help="multistart count per problem (default 64)")
    p.add_argument("--seed", type=int, help="random seed (default 1)")
    p.add_argument("--tol", type=float, help="feasibility tolerance (default 1e-8)")
    p.add_argument("--max-iter", type=int, help="local solver iteration limit")
    p.add_argument("--eps-q", type=float, help="lower bound imposed on q1 for Cabello")
    p.add_argument("--lr-rows", choices=LR_ROW_CONVENTIONS,
                   help="local-randomness equalities: published rows or box marginals")
    p.add_argument("--workers", type=int, help="worker processes for suite runs")
    p.add_argument("--format", choices=FORMATS, help="output format (default markdown)")
    p.add_argument("--out", help="write the report to this file instead of stdout")
    p.add_argument("--config", help="flat key = value file; flags override it")
    if samples:
        p.add_argument("--samples", type=int, help="oracle samples per problem (default 100000)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hardycabello",
        description="Bounds on Hardy and Cabello nonlocal success probabilities.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("table", help="reproduce a published table with deltas")
    t.add_argument("number", type=int, choices=(1, 2, 3, 4))
    t.add_argument("--strict", action="store_true",
                   help="exit with status 1 when any cell is outside tolerance")
    _add_common(t)

    r = sub.add_parser("run", help="solve selected (argument, principle, case) problems")
    _add_selection(r)
    _add_common(r)

    o = sub.add_parser("oracle", help="solve and compare against the sampling oracle")
    _add_selection(o)
    _add_common(o, samples=True)

    v = sub.add_parser("verify", help="check a box given as 16 numbers or JSON")
    v.add_argument("path", help="box file ('-' for stdin)")
    v.add_argument("--format", choices=("markdown", "json"))
    v.add_argument("--out")
    v.add_argument("--tol", type=float)
    return parser


CONFIG_KEYS = {
    "starts": int, "seed": int, "tol": float, "max_iter": int, "eps_q": float,
    "lr_rows": str, "workers": int, "format": str, "out": str, "samples": int,
    "argument": str, "principle": str, "case": str,
}


def read_config(path) -> dict:
    """Flat ``key = value`` file (``#`` comments allowed), returned typed."""
    text = Path(path).read_text()
    parser = configparser.ConfigParser(interpolation=None)
    parser.read_string("[run]\n" + text, source=str(path))
    out = {}
    for key, raw in parser["run"].items():
        key = key.replace("-", "_")
        if key not in CONFIG_KEYS:
            raise ValueError(f"{path}: unknown config key {key!r}")
        try:
            out[key] = CONFIG_KEYS[key](raw.strip())
        except ValueError:
            raise ValueError(f"{path}: bad value for {key}: {raw!r}") from None
    return out


def _flatten(values):
    return None if values is None else [v for group in values for v in group]


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    """Flags override the config file, which overrides defaults."""
    file_cfg = read_config(ns.config) if getattr(ns, "config", None) else {}

    def pick(name, default):
        flag = getattr(ns, name, None)
        if flag is not None:
            return flag
        return file_cfg.get(name, default)

    arguments = _flatten(getattr(ns, "argument", None))
    if arguments is None and "argument" in file_cfg:
        arguments = _choice_list(Argument)(file_cfg["argument"])
    principles = _flatten(getattr(ns, "principle", None))
    if principles is None and "principle" in file_cfg:
        principles = _choice_list(Principle)(file_cfg["principle"])
    cases = getattr(ns, "case", None)
    if cases is None and "case" in file_cfg:
        cases = [_case_index(c) for c in file_cfg["case"].split(",")]

    base = SolverConfig()
    solver = replace(base, starts=pick("starts", base.starts), seed=pick("seed", base.seed),
                     tol=pick("tol", base.tol), max_iter=pick("max_iter", base.max_iter))
    if solver.starts < 1:
        raise ValueError("starts must be >= 1")
    samples = pick("samples", DEFAULT_SAMPLES)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    return RunConfig(
        arguments=tuple(dict.fromkeys(arguments)) if arguments else tuple(Argument),
        principles=tuple(dict.fromkeys(principles)) if principles else tuple(Principle),
        cases=tuple(sorted(set(cases))) if cases else tuple(range(1, len(CASES) + 1)),
        solver=solver,
        oracle_samples=samples,
        fmt=pick("format", "markdown"),
        out=pick("out", None),
        eps_q=pick("eps_q", DEFAULT_EPS_Q),
        lr_rows=pick("lr_rows", "published"),
        workers=pick("workers", 1),
    )


def _emit(text: str, out: Optional[str]):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _suite(cfg: RunConfig, arguments, principles, cases) -> list:
    rows = []
    for arg in arguments:
        rows += run_suite(arg, principles, cases, cfg.solver, eps_q=cfg.eps_q,
                          lr_rows=cfg.lr_rows, workers=cfg.workers)
    return rows


# --- subcommands ---------------------------------------------------------------

TABLE_SELECTIONS = {
    1: (tuple(Argument), tuple(Principle), (16,)),
    2: ((Argument.HNA,), tuple(Principle), tuple(range(1, 17))),
    3: ((Argument.CNA,), tuple(Principle), tuple(range(1, 17))),
    4: (tuple(Argument), (Principle.IC, Principle.ML, Principle.LO), tuple(range(1, 17))),
}


def cmd_table(n: int, cfg: RunConfig, strict: bool = False) -> int:
    rows = _suite(cfg, *TABLE_SELECTIONS[n])
    report = build_table(n, rows, eps_q=cfg.eps_q)
    _emit(report.render(cfg.fmt), cfg.out)
    if not report.passed:
        log.warning("table %d: %d cell(s) outside tolerance", n, len(report.failures))
        if strict:
            return 1
    return 0


def cmd_run(cfg: RunConfig) -> int:
    rows = _suite(cfg, cfg.arguments, cfg.principles, cfg.cases)
    _emit(rows_report(rows, cfg.fmt), cfg.out)
    return 0


def cmd_oracle(cfg: RunConfig) -> int:
    rows = _suite(cfg, cfg.arguments, cfg.principles, cfg.cases)
    found = {}
    for r in rows:
        found[(r.argument, r.principle, r.case_index)] = sample_max(
            r.argument, r.principle, case_lr(r.case_index), cfg.oracle_samples, cfg.solver.seed,
            eps_q=cfg.eps_q, lr_rows=cfg.lr_rows)
    _emit(rows_report(rows, cfg.fmt, oracle=found), cfg.out)
    return 0


_NUMBER = re.compile(r"[^\s,;\[\]]+")


def parse_box_text(text: str) -> JointBox:
    """16 probabilities as JSON (flat, 4x4 or ``{"p": ...}``) or plain numbers.

    Plain text may separate numbers with whitespace, commas or semicolons and
    use ``#`` comments.  Rows are inputs xy = 00, 01, 10, 11 and columns
    outputs ab = 00, 01, 10, 11.
    """
    stripped = text.lstrip()
    if stripped.startswith(("[", "{")):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise BoxParseError(exc.msg, exc.lineno, exc.colno) from None
        if isinstance(data, dict):
            if "p" not in data:
                raise BoxParseError('JSON object needs a "p" entry', 1, 1)
            data = data["p"]
        try:
            values = np.asarray(data, dtype=float).ravel()
        except (TypeError, ValueError):
            raise BoxParseError("entries must be numbers", 1, 1) from None
        if values.size != 16:
            raise BoxParseError(f"expected 16 entries, found {values.size}", 1, 1)
        return JointBox(values)
    values = []
    last = (1, 1)
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0]
        for m in _NUMBER.finditer(body):
            col = m.start() + 1
            try:
                v = float(m.group())
            except ValueError:
                raise BoxParseError(f"not a number: {m.group()!r}", lineno, col) from None
            if not math.isfinite(v):
                raise BoxParseError(f"not a finite number: {m.group()!r}", lineno, col)
            values.append(v)
            last = (lineno, m.end() + 1)
            if len(values) > 16:
                raise BoxParseError("more than 16 entries", lineno, col)
    if len(values) != 16:
        raise BoxParseError(f"expected 16 entries, found {len(values)}", *last)
    return JointBox(values)


def lo_family(box: JointBox) -> Optional[str]:
    """Which reduced LO set applies, judged by the box's structural zeros."""
    p = box.p
    cabello_zeros = abs(p[0, 0, 1, 0]) <= ZERO_TOL and abs(p[1, 1, 0, 0]) <= ZERO_TOL
    if cabello_zeros and abs(p[0, 1, 0, 1]) <= ZERO_TOL:
        return "hardy"
    return "cabello" if cabello_zeros else None


def verify_box(box: JointBox, tol: float = 1e-8) -> dict:
    validity = check_box(box, 1e-9)
    out = {"box": [list(map(float, row)) for row in box.as_matrix()],
           "validity": validity.to_dict(), "signaling": validity.no_signaling > 1e-9}
    try:
        m = marginals(box, tol=np.inf)
        out["marginals"] = {"alice": m.pA.tolist(), "bob": m.pB.tolist(),
                            "read_from": "Alice at y=0, Bob at x=0"}
    except ValueError as exc:  # pragma: no cover - tol=inf never signals
        out["marginals"] = str(exc)
    ic = ic_residuals(box)
    ml = ml_residual(box)
    out["principles"] = {"IC": _with_tol(ic, tol), "ML": _with_tol(ml, tol)}
    family = lo_family(box)
    if family is None:
        out["principles"]["LO"] = {"applicable": False,
                                   "reason": "reduced LO sets need the Hardy or Cabello zeros"}
    else:
        params = to_ns_params(box, tol=np.inf)
        lo = lo_residuals_from_params(params, family)
        out["principles"]["LO"] = {"applicable": True, "family": family, **_with_tol(lo, tol)}
    return out


def _with_tol(res, tol):
    d = res.to_dict()
    d["feasible"] = res.max <= tol
    return d


def _verify_markdown(rep: dict) -> str:
    v = rep["validity"]
    lines = ["## Box check", ""]
    lines += ["| xy \\ ab | 00 | 01 | 10 | 11 |", "|---|---|---|---|---|"]
    for label, row in zip(("00", "01", "10", "11"), rep["box"]):
        lines.append(f"| {label} | " + " | ".join(f"{x:.6g}" for x in row) + " |")
    lines += ["",
              f"- positivity violation: {v['positivity_violation']:.3g}",
              f"- normalization residual: {v['normalization_residual']:.3g}",
              f"- no-signaling residual: {v['no_signaling_residual']:.3g}"
              + ("  (SIGNALING box: residuals below are still reported)" if rep["signaling"] else ""),
              f"- valid: {v['valid']}"]
    m = rep["marginals"]
    lines.append(f"- marginals P(a|x): {np.round(m['alice'], 6).tolist()}, "
                 f"P(b|y): {np.round(m['bob'], 6).tolist()}")
    for name in ("IC", "ML", "LO"):
        r = rep["principles"][name]
        if not r.get("applicable", True):
            lines.append(f"- {name}: not applicable ({r['reason']})")
            continue
        status = "satisfied" if r["feasible"] else "VIOLATED"
        family = f" [{r['family']}]" if "family" in r else ""
        lines.append(f"- {name}{family}: {status}, max residual {r['max']:+.6g}")
        for item in r["residuals"]:
            lines.append(f"  - {item['label']}: {item['value']:+.6g}")
    return "\n".join(lines) + "\n"


def cmd_verify(path: str, fmt: str = "markdown", out: Optional[str] = None, tol: float = 1e-8) -> int:
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    try:
        box = parse_box_text(text)
    except BoxParseError as exc:
        print(f"error: {path}: parse error at {exc}", file=sys.stderr)
        return 1
    rep = verify_box(box, tol)
    _emit(json.dumps(rep, indent=2) + "\n" if fmt == "json" else _verify_markdown(rep), out)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        if ns.command == "verify":
            return cmd_verify(ns.path, ns.format or "markdown", ns.out,
                              ns.tol if ns.tol is not None else 1e-8)
        cfg = resolve_config(ns)
        if ns.command == "table":
            return cmd_table(ns.number, cfg, ns.strict)
        if ns.command == "run":
            return cmd_run(cfg)
        return cmd_oracle(cfg)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
