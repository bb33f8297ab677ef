"""Hardy/Cabello optimization problems for each principle and local-randomness case."""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .boxes import (
    CABELLO_DIM,
    CABELLO_MAP,
    HARDY_DIM,
    HARDY_MAP,
    box_arrays,
    cabello_box,
    check_box,
    hardy_box,
)
from .optimizer import (
    ConstrainedProblem,
    InfeasibleEqualitiesError,
    InfeasibleProblemError,
    SolverConfig,
    maximize,
)
from .principles import (
    FEASIBILITY_TOL,
    IC_DISTINCT,
    ic_residuals,
    ic_values,
    lo_box_values,
    lo_cabello_residuals,
    lo_hardy_residuals,
    ml_residual,
    ml_values,
)

DEFAULT_EPS_Q = 1e-6


class Argument(str, enum.Enum):
    HNA = "HNA"
    CNA = "CNA"

    @property
    def dim(self) -> int:
        return HARDY_DIM if self is Argument.HNA else CABELLO_DIM

    @property
    def linear_map(self) -> np.ndarray:
        return HARDY_MAP if self is Argument.HNA else CABELLO_MAP

    def box(self, c):
        return hardy_box(c) if self is Argument.HNA else cabello_box(c)


class Principle(str, enum.Enum):
    NS = "NS"
    IC = "IC"
    ML = "ML"
    LO = "LO"

    @property
    def label(self) -> str:
        return "NS" if self is Principle.NS else f"NS+{self.value}"


@dataclass(frozen=True)
class LRSelection:
    """Which inputs are locally random: Alice's x = 0, 1 and Bob's y = 0, 1."""

    a0: bool = False
    a1: bool = False
    b0: bool = False
    b1: bool = False

    FLAGS = ("a0", "a1", "b0", "b1")
    NAMES = {"a0": "0_A", "a1": "1_A", "b0": "0_B", "b1": "1_B"}

    @property
    def flags(self) -> tuple[str, ...]:
        return tuple(f for f in self.FLAGS if getattr(self, f))

    @property
    def label(self) -> str:
        return ",".join(self.NAMES[f] for f in self.flags) or "NO LR"

    @classmethod
    def parse(cls, text: str) -> "LRSelection":
        text = text.strip()
        if text.upper() in ("", "NO LR", "NONE"):
            return cls()
        lookup = {v.upper(): k for k, v in cls.NAMES.items()}
        kwargs = {}
        for token in text.split(","):
            key = lookup.get(token.strip().upper())
            if key is None:
                raise ValueError(f"unknown locally random input {token!r}")
            kwargs[key] = True
        return cls(**kwargs)

    def issubset(self, other: "LRSelection") -> bool:
        return set(self.flags) <= set(other.flags)


def _lr(*names):
    return LRSelection(**{n: True for n in names})


# Row order of the published tables: all four, the triples, the pairs,
# the singles, then no locally random input.
CASES: tuple[LRSelection, ...] = (
    _lr("a0", "a1", "b0", "b1"),
    _lr("a0", "a1", "b0"),
    _lr("a0", "a1", "b1"),
    _lr("a0", "b0", "b1"),
    _lr("a1", "b0", "b1"),
    _lr("a0", "a1"),
    _lr("b0", "b1"),
    _lr("a1", "b1"),
    _lr("a0", "b0"),
    _lr("a0", "b1"),
    _lr("a1", "b0"),
    _lr("a0"),
    _lr("a1"),
    _lr("b0"),
    _lr("b1"),
    _lr(),
)


def case_lr(case_index: int) -> LRSelection:
    if not 1 <= case_index <= len(CASES):
        raise ValueError(f"case index must be in 1..{len(CASES)}, got {case_index}")
    return CASES[case_index - 1]


# Equality rows used to produce the published tables, one pair per flag.  For
# most flags they are not the marginals of the decomposed box (see
# ``lr_equalities(..., rows="box")`` for those); they are kept verbatim so the
# tables reproduce.
PUBLISHED_LR_ROWS = {
    Argument.HNA: {
        "a0": ([1, 1, 0, 0, 0, 0.5], [0, 0, 1, 1, 1, 0.5]),
        "a1": ([0, 0, 1, 0, 0, 0.5], [1, 1, 0, 1, 1, 0.5]),
        "b0": ([0, 0, 1, 1, 0, 0.5], [1, 1, 0, 0, 1, 0.5]),
        "b1": ([1, 0, 0, 0, 0, 0.5], [0, 1, 1, 1, 1, 0.5]),
    },
    Argument.CNA: {
        "a0": ([1, 1, 0, 0, 0, 0.5, 1, 1, 1, 1, 0.5], [0, 0, 1, 1, 1, 0.5, 0, 0, 0, 0, 0.5]),
        "a1": ([1, 1, 0, 1, 1, 0.5, 1, 1, 0, 0, 0.5], [0, 0, 1, 0, 0, 0.5, 0, 0, 1, 1, 0.5]),
        "b0": ([0, 0, 1, 1, 0, 0.5, 1, 1, 1, 1, 0.5], [1, 1, 0, 0, 1, 0.5, 0, 0, 0, 0, 0.5]),
        "b1": ([0, 1, 1, 1, 1, 0.5, 1, 0, 1, 0, 0.5], [1, 0, 0, 0, 0, 0.5, 0, 1, 0, 1, 0.5]),
    },
}

LR_ROW_CONVENTIONS = ("published", "box")


def _box_marginal_rows(argument: Argument, flag: str):
    boxes = argument.linear_map.reshape(-1, 2, 2, 2, 2)
    if flag[0] == "a":
        x = int(flag[1])
        return tuple(boxes[:, x, 0, out, :].sum(axis=-1) for out in (0, 1))
    y = int(flag[1])
    return tuple(boxes[:, 0, y, :, out].sum(axis=-1) for out in (0, 1))


def lr_equalities(argument, lr: LRSelection, rows: str = "published") -> list:
    """Two ``(weights, 1/2)`` equalities per locally random input.

    ``rows="published"`` returns the tabulated equality rows; ``rows="box"``
    reads P(0|input) and P(1|input) off the decomposed box instead.
    """
    argument = Argument(argument)
    if rows not in LR_ROW_CONVENTIONS:
        raise ValueError(f"rows must be one of {LR_ROW_CONVENTIONS}")
    out = []
    for flag in lr.flags:
        pair = (PUBLISHED_LR_ROWS[argument][flag] if rows == "published"
                else _box_marginal_rows(argument, flag))
        out.extend((np.asarray(w, dtype=float), 0.5) for w in pair)
    return out


def objective_weights(argument) -> np.ndarray:
    """Linear objective: q4 = c6/2 (HNA) or q4 - q1 = (c6 - c11)/2 - c7 - c9 - c10."""
    argument = Argument(argument)
    w = np.zeros(argument.dim)
    w[5] = 0.5
    if argument is Argument.CNA:
        w[10] = -0.5
        w[[6, 8, 9]] = -1.0
    return w


def q1_weights() -> np.ndarray:
    """P(01|01) of the Cabello box: c7 + c8 + c9 + c10 + c11/2."""
    w = np.zeros(CABELLO_DIM)
    w[6:10] = 1.0
    w[10] = 0.5
    return w


def _constraint_fn(argument: Argument, principle: Principle):
    linear_map = argument.linear_map
    family = "hardy" if argument is Argument.HNA else "cabello"
    if principle is Principle.NS:
        return None
    if principle is Principle.IC:
        return lambda c: ic_values(box_arrays(c, linear_map))[..., IC_DISTINCT]
    if principle is Principle.ML:
        return lambda c: ml_values(box_arrays(c, linear_map))
    return lambda c: lo_box_values(box_arrays(c, linear_map), family)


def build_problem(argument, principle, lr: LRSelection, *, eps_q: float = DEFAULT_EPS_Q,
                  lr_rows: str = "published") -> ConstrainedProblem:
    argument, principle = Argument(argument), Principle(principle)
    dim = argument.dim
    w = objective_weights(argument)
    lin_eq = [(np.ones(dim), 1.0)] + lr_equalities(argument, lr, lr_rows)
    # strict q1 > 0 for Cabello, as -q1 + eps_q <= 0
    lin_ineq = [(-q1_weights(), -eps_q)] if argument is Argument.CNA else []
    return ConstrainedProblem(
        dim=dim,
        objective=lambda c: np.asarray(c) @ w,
        lin_eq=tuple(lin_eq),
        nonlin_ineq=_constraint_fn(argument, principle),
        lin_ineq=tuple(lin_ineq),
        name=f"{argument.value} {principle.label} [{lr.label}]",
    )


@dataclass(frozen=True)
class CaseRow:
    case_index: int
    lr: LRSelection
    principle: Principle
    argument: Argument
    value: Optional[float]
    point: Optional[tuple]
    status: str = "ok"
    max_eq_residual: float = float("nan")
    max_ineq_residual: float = float("nan")
    converged: int = 0
    starts: int = 0
    validated: bool = False

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> dict:
        return {
            "argument": self.argument.value,
            "principle": self.principle.label,
            "case": self.case_index,
            "locally_random": self.lr.label,
            "value": self.value,
            "point": list(self.point) if self.point is not None else None,
            "status": self.status,
            "max_eq_residual": self.max_eq_residual,
            "max_ineq_residual": self.max_ineq_residual,
            "converged_starts": self.converged,
            "starts": self.starts,
            "validated": self.validated,
            "source": "computed",
        }


def principle_residuals(argument, principle, c):
    """Residual set of ``principle`` at coefficients ``c`` via the public evaluators."""
    argument, principle = Argument(argument), Principle(principle)
    if principle is Principle.NS:
        return None
    if principle is Principle.LO:
        return lo_hardy_residuals(c) if argument is Argument.HNA else lo_cabello_residuals(c)
    box = argument.box(c)
    return ic_residuals(box) if principle is Principle.IC else ml_residual(box)


def validate_point(argument, principle, lr, c, value, *, eps_q=DEFAULT_EPS_Q,
                   lr_rows="published", tol=FEASIBILITY_TOL) -> bool:
    """Re-check a solution through the box itself rather than the solver's view."""
    argument = Argument(argument)
    box = argument.box(c)
    if not check_box(box, tol).valid:
        return False
    res = principle_residuals(argument, principle, c)
    if res is not None and res.max > tol:
        return False
    for w, rhs in lr_equalities(argument, lr, lr_rows):
        if abs(w @ c - rhs) > tol:
            return False
    q4 = box.prob(0, 0, 1, 0)
    q1 = box.prob(0, 1, 0, 1)
    if argument is Argument.HNA:
        target = q4
    else:
        if q1 < eps_q - tol:
            return False
        target = q4 - q1
    return abs(target - value) <= 1e-9


def solve_case(argument, principle, case_index: int, cfg: SolverConfig = SolverConfig(), *,
               eps_q: float = DEFAULT_EPS_Q, lr_rows: str = "published") -> CaseRow:
    argument, principle = Argument(argument), Principle(principle)
    lr = case_lr(case_index)
    problem = build_problem(argument, principle, lr, eps_q=eps_q, lr_rows=lr_rows)
    base = dict(case_index=case_index, lr=lr, principle=principle, argument=argument)
    try:
        res = maximize(problem, cfg)
    except (InfeasibleProblemError, InfeasibleEqualitiesError) as exc:
        eq = getattr(exc, "max_eq_residual", None)
        ineq = getattr(exc, "max_ineq_residual", None)
        return CaseRow(**base, value=None, point=None, status="infeasible",
                       max_eq_residual=float("nan") if eq is None else eq,
                       max_ineq_residual=float("nan") if ineq is None else ineq,
                       starts=cfg.starts)
    point = tuple(float(v) for v in res.best_point)
    ok = validate_point(argument, principle, lr, res.best_point, res.best_value,
                        eps_q=eps_q, lr_rows=lr_rows, tol=cfg.tol)
    return CaseRow(**base, value=float(res.best_value), point=point, status="ok",
                   max_eq_residual=res.max_eq_residual, max_ineq_residual=res.max_ineq_residual,
                   converged=res.converged_count, starts=res.starts_run, validated=ok)


def _solve_job(job):
    argument, principle, case_index, cfg, eps_q, lr_rows = job
    return solve_case(argument, principle, case_index, cfg, eps_q=eps_q, lr_rows=lr_rows)


def run_suite(argument, principles: Sequence = tuple(Principle), cases: Sequence[int] = range(1, 17),
              cfg: SolverConfig = SolverConfig(), *, eps_q: float = DEFAULT_EPS_Q,
              lr_rows: str = "published", workers: int = 1) -> list:
    """One row per (principle, case), ordered by principle then case index.

    With ``workers > 1`` rows are solved in separate processes; the output
    order does not depend on completion order.
    """
    argument = Argument(argument)
    principles = sorted({Principle(p) for p in principles}, key=list(Principle).index)
    cases = sorted({int(c) for c in cases})
    for c in cases:
        case_lr(c)
    jobs = [(argument, p, c, cfg, eps_q, lr_rows) for p in principles for c in cases]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_solve_job, jobs))
    return [_solve_job(job) for job in jobs]


def euclidean_distance(u, v) -> float:
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.size} vs {v.size}")
    return math.sqrt(float(((u - v) ** 2).sum()))
