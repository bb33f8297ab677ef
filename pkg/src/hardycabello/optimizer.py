"""Multistart maximization over a polytope with smooth inequality constraints.

Linear equalities are eliminated exactly: an LP presolve fixes every
coordinate the polytope pins to a single value, and the remaining free
coordinates are parametrized over the null space of the equality rows.  Each
start is then solved with SLSQP on the reduced variables using central
finite-difference derivatives.  A start that stops slightly infeasible is
pulled back along the segment to a feasible anchor point by bisection.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog, minimize

log = logging.getLogger(__name__)

FIXED_RANGE_TOL = 1e-10
PROJECTION_TOL = 1e-12
BISECTION_STEPS = 60
ACCEPT_FRACTION = 0.5


class InfeasibleEqualitiesError(ValueError):
    """The linear equalities (with bounds) admit no point."""


class InfeasibleProblemError(RuntimeError):
    """No start produced a point meeting the constraint tolerance."""

    def __init__(self, message, best_point=None, max_eq_residual=None, max_ineq_residual=None):
        super().__init__(message)
        self.best_point = best_point
        self.max_eq_residual = max_eq_residual
        self.max_ineq_residual = max_ineq_residual


@dataclass(frozen=True)
class SolverConfig:
    starts: int = 64
    seed: int = 1
    max_iter: int = 200
    tol: float = 1e-8
    fd_step: float = 1e-7


@dataclass(frozen=True, eq=False)
class ConstrainedProblem:
    """Maximize ``objective(c)`` subject to linear and nonlinear constraints.

    ``objective`` maps ``(..., dim)`` to ``(...)`` and ``nonlin_ineq`` maps
    ``(..., dim)`` to ``(..., k)`` residuals (feasible when ``<= 0``); both must
    broadcast over leading axes.  ``lin_eq`` rows read ``w @ c == rhs`` and
    ``lin_ineq`` rows ``w @ c <= rhs``.  Bounds default to ``[0, 1]``.
    """

    dim: int
    objective: Callable[[np.ndarray], np.ndarray]
    lin_eq: tuple = ()
    nonlin_ineq: Optional[Callable[[np.ndarray], np.ndarray]] = None
    bounds: Optional[tuple] = None
    lin_ineq: tuple = ()
    name: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        eq = tuple((np.asarray(w, dtype=float), float(r)) for w, r in self.lin_eq)
        ineq = tuple((np.asarray(w, dtype=float), float(r)) for w, r in self.lin_ineq)
        for w, _ in eq + ineq:
            if w.shape != (self.dim,):
                raise ValueError(f"constraint weights must have length {self.dim}")
        bounds = self.bounds if self.bounds is not None else ((0.0, 1.0),) * self.dim
        bounds = tuple((float(lo), float(hi)) for lo, hi in bounds)
        if len(bounds) != self.dim or any(lo > hi for lo, hi in bounds):
            raise ValueError("bounds must give lo <= hi for every coordinate")
        object.__setattr__(self, "lin_eq", eq)
        object.__setattr__(self, "lin_ineq", ineq)
        object.__setattr__(self, "bounds", bounds)

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.bounds])

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.bounds])

    def eq_system(self):
        if not self.lin_eq:
            return np.zeros((0, self.dim)), np.zeros(0)
        return (np.array([w for w, _ in self.lin_eq]), np.array([r for _, r in self.lin_eq]))

    def ineq_system(self):
        if not self.lin_ineq:
            return np.zeros((0, self.dim)), np.zeros(0)
        return (np.array([w for w, _ in self.lin_ineq]), np.array([r for _, r in self.lin_ineq]))

    def inequality_residuals(self, c: np.ndarray) -> np.ndarray:
        """Bounds, linear and nonlinear inequality residuals, batched."""
        c = np.asarray(c, dtype=float)
        G, h = self.ineq_system()
        parts = [self.lower - c, c - self.upper, c @ G.T - h]
        if self.nonlin_ineq is not None:
            inside = np.clip(c, self.lower, self.upper)
            parts.append(np.asarray(self.nonlin_ineq(inside), dtype=float))
        return np.concatenate(parts, axis=-1)


@dataclass
class OptResult:
    best_point: np.ndarray
    best_value: float
    max_eq_residual: float
    max_ineq_residual: float
    starts_run: int
    converged_count: int
    restored_count: int = 0
    values: list = field(default_factory=list, repr=False)


def evaluate(problem: ConstrainedProblem, c) -> tuple[float, float, float]:
    """Return ``(objective, max |eq residual|, max inequality residual)`` at ``c``."""
    c = np.asarray(c, dtype=float)
    A, b = problem.eq_system()
    eq = float(np.abs(A @ c - b).max()) if len(b) else 0.0
    ineq = float(problem.inequality_residuals(c).max())
    return float(problem.objective(c)), eq, ineq


def project_to_polytope(points, A, b, lo, hi, max_iter=20000):
    """Alternate affine least-squares projection and clipping to the box.

    ``lo`` and ``hi`` may be per-point arrays of the same shape as ``points``.
    Points stop moving once a clipping step changes them by at most
    ``PROJECTION_TOL``; the rest keep iterating up to ``max_iter`` times.
    """
    pts = np.array(points, dtype=float, ndmin=2)
    lo = np.broadcast_to(lo, pts.shape)
    hi = np.broadcast_to(hi, pts.shape)
    pinv = np.linalg.pinv(A) if len(b) else np.zeros((A.shape[1], 0))
    pts = np.clip(pts, lo, hi)
    active = np.arange(len(pts))
    for _ in range(max_iter):
        if not active.size:
            break
        sub = pts[active]
        if len(b):
            sub = sub - (sub @ A.T - b) @ pinv.T
        clipped = np.clip(sub, lo[active], hi[active])
        moving = np.abs(clipped - sub).max(axis=-1) > PROJECTION_TOL
        pts[active] = clipped
        active = active[moving]
    return pts


def _check_consistent(A, b):
    if not len(b):
        return
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    if np.abs(A @ x - b).max() > 1e-9:
        raise InfeasibleEqualitiesError("infeasible equalities: the system A c = b is inconsistent")


def sample_starts(dim: int, eqs: Sequence = (), n: int = 1, seed: int = 1, bounds=None) -> list:
    """``n`` Dirichlet(1) points moved onto ``{w @ c = rhs}`` inside the bounds.

    Even-numbered points are drawn on the whole simplex, odd-numbered ones on
    a random face (uniform support size, uniform subset) and kept on that face
    when it meets the equalities.  Points are drawn one after another from a
    single generator, so the first ``k`` points of a larger request equal a
    request for ``k`` points.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    A = np.array([np.asarray(w, dtype=float) for w, _ in eqs]).reshape(len(eqs), dim)
    b = np.array([float(r) for _, r in eqs])
    _check_consistent(A, b)
    lo, hi = (np.zeros(dim), np.ones(dim)) if bounds is None else map(np.asarray, zip(*bounds))
    rng = np.random.default_rng(seed)
    raw = np.empty((n, dim))
    support = np.ones((n, dim), dtype=bool)
    for i in range(n):
        raw[i] = rng.dirichlet(np.ones(dim))
        if i % 2:
            chosen = rng.permutation(dim)[:rng.integers(1, dim + 1)]
            support[i] = np.isin(np.arange(dim), chosen)
            raw[i] = np.where(support[i], raw[i], 0.0)
            raw[i] /= raw[i].sum()
    pts = project_to_polytope(raw, A, b, lo, np.where(support, hi, lo))
    off = np.abs(pts @ A.T - b).max(axis=-1) > 1e-9 if len(b) else np.zeros(n, dtype=bool)
    if off.any():
        pts[off] = project_to_polytope(raw[off], A, b, lo, hi)
    if len(b) and np.abs(pts @ A.T - b).max() > 1e-8:
        raise InfeasibleEqualitiesError("infeasible equalities: no point inside the bounds")
    return [p for p in pts]


class _Reduced:
    """Affine parametrization ``c = base + lift @ z`` of the constraint polytope."""

    def __init__(self, problem: ConstrainedProblem):
        A, b = problem.eq_system()
        G, h = problem.ineq_system()
        _check_consistent(A, b)
        lo, hi = problem.lower, problem.upper
        dim = problem.dim
        lp_kw = dict(A_eq=A if len(b) else None, b_eq=b if len(b) else None,
                     A_ub=G if len(h) else None, b_ub=h if len(h) else None,
                     bounds=list(zip(lo, hi)), method="highs")
        ranges = np.zeros((dim, 2))
        for i in range(dim):
            for j, sign in enumerate((1.0, -1.0)):
                cost = np.zeros(dim)
                cost[i] = sign
                res = linprog(cost, **lp_kw)
                if res.status == 2:
                    raise InfeasibleEqualitiesError("infeasible equalities: polytope is empty")
                if res.status != 0:
                    raise RuntimeError(f"presolve LP failed: {res.message}")
                ranges[i, j] = sign * res.fun
        fixed = ranges[:, 1] - ranges[:, 0] <= FIXED_RANGE_TOL
        self.fixed_values = np.where(fixed, ranges.mean(axis=1), 0.0)
        self.free = np.flatnonzero(~fixed)
        self.dim = dim
        A_free = A[:, self.free]
        rhs = b - A @ self.fixed_values
        if len(rhs) and len(self.free):
            particular, *_ = np.linalg.lstsq(A_free, rhs, rcond=None)
            basis = null_space(A_free)
        else:
            particular = np.zeros(len(self.free))
            basis = np.eye(len(self.free))
        self.base = self.fixed_values.copy()
        self.base[self.free] = particular
        self.lift = np.zeros((dim, basis.shape[1]))
        self.lift[self.free] = basis

    @property
    def k(self) -> int:
        return self.lift.shape[1]

    def point(self, z):
        return self.base + np.asarray(z) @ self.lift.T

    def coords(self, c):
        return (np.asarray(c) - self.base) @ self.lift


def _central_jacobian(fn, z, step):
    k = z.size
    offsets = np.eye(k) * step
    stacked = np.concatenate([z + offsets, z - offsets])
    vals = np.asarray(fn(stacked))
    if vals.ndim == 1:
        vals = vals[:, None]
    return ((vals[:k] - vals[k:]) / (2 * step)).T


class _LocalSolver:
    def __init__(self, problem: ConstrainedProblem, red: _Reduced, cfg: SolverConfig):
        self.problem = problem
        self.red = red
        self.cfg = cfg
        self.lo, self.hi = problem.lower, problem.upper
        free = red.free
        L = red.lift[free]
        G, h = problem.ineq_system()
        lin_rows = [L, -L, -(G @ red.lift)]
        self._lin_jac = np.vstack(lin_rows)
        self._G, self._h = G, h

    def _inside(self, z):
        return np.clip(self.red.point(z), self.lo, self.hi)

    def neg_objective(self, z):
        return -np.asarray(self.problem.objective(self._inside(z)))

    def lin_cons(self, z):
        c = self.red.point(z)
        f = self.red.free
        return np.concatenate([c[..., f] - self.lo[f], self.hi[f] - c[..., f],
                               self._h - c @ self._G.T], axis=-1)

    def nonlin_cons(self, z):
        return -np.asarray(self.problem.nonlin_ineq(self._inside(z)))

    def solve(self, z0):
        cfg = self.cfg
        cons = [{"type": "ineq", "fun": self.lin_cons, "jac": lambda z: self._lin_jac}]
        if self.problem.nonlin_ineq is not None:
            cons.append({"type": "ineq", "fun": self.nonlin_cons,
                         "jac": lambda z: _central_jacobian(self.nonlin_cons, z, cfg.fd_step)})
        res = minimize(
            self.neg_objective, z0,
            jac=lambda z: _central_jacobian(self.neg_objective, z, cfg.fd_step)[0],
            method="SLSQP", constraints=cons,
            options={"maxiter": cfg.max_iter, "ftol": 1e-12},
        )
        return res.x, res.status == 0


def _max_ineq(problem, c):
    return problem.inequality_residuals(c).max(axis=-1)


def _find_anchor(problem, red, local, starts, tol):
    """A point of the polytope meeting every inequality, or None."""
    worst = _max_ineq(problem, starts)
    best = int(np.argmin(worst))
    if worst[best] <= tol:
        return starts[best]
    if problem.nonlin_ineq is None or red.k == 0:
        return None
    # phase 1: minimize the largest nonlinear residual over the polytope
    z0 = np.append(red.coords(starts[best]), worst[best])

    def slack(v):
        return v[..., -1:] + local.nonlin_cons(v[..., :-1])

    cons = [
        {"type": "ineq", "fun": lambda v: local.lin_cons(v[..., :-1]),
         "jac": lambda v: np.hstack([local._lin_jac, np.zeros((local._lin_jac.shape[0], 1))])},
        {"type": "ineq", "fun": slack,
         "jac": lambda v: _central_jacobian(slack, v, local.cfg.fd_step)},
    ]
    res = minimize(lambda v: v[-1], z0, jac=lambda v: np.eye(v.size)[-1], method="SLSQP",
                   constraints=cons, options={"maxiter": 500, "ftol": 1e-14})
    c = local._inside(res.x[:-1])
    return c if _max_ineq(problem, c) <= tol else None


def _restore(problem, anchor, c, tol):
    lo_t, hi_t = 0.0, 1.0
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo_t + hi_t)
        if _max_ineq(problem, anchor + mid * (c - anchor)) <= tol:
            lo_t = mid
        else:
            hi_t = mid
    return anchor + lo_t * (c - anchor)


def maximize(problem: ConstrainedProblem, cfg: SolverConfig = SolverConfig()) -> OptResult:
    """Best feasible local maximum over ``cfg.starts`` deterministic starts.

    Raises
    ------
    InfeasibleEqualitiesError
        If the linear equalities and bounds admit no point.
    InfeasibleProblemError
        If no start ends within ``cfg.tol`` of every constraint.
    """
    red = _Reduced(problem)
    local = _LocalSolver(problem, red, cfg)
    # accept with headroom so independent re-evaluation stays within cfg.tol
    target = ACCEPT_FRACTION * cfg.tol
    A, b = problem.eq_system()
    starts = np.array(sample_starts(problem.dim, problem.lin_eq, cfg.starts, cfg.seed,
                                    problem.bounds))
    # starts on the exact affine parametrization
    starts = np.clip(red.point(red.coords(starts)), problem.lower, problem.upper)
    anchor = None
    anchor_done = False

    best = None
    values = []
    converged = restored = 0
    closest = (np.inf, None, np.inf)
    for s in range(cfg.starts):
        if red.k:
            z, ok = local.solve(red.coords(starts[s]))
            c = local._inside(z)
        else:
            c, ok = red.base.copy(), True
        value, eq_res, ineq_res = evaluate(problem, c)
        if ineq_res > target:
            if not anchor_done:
                anchor = _find_anchor(problem, red, local, starts, target)
                anchor_done = True
            if ineq_res < closest[0]:
                closest = (ineq_res, c, eq_res)
            if anchor is None:
                values.append(None)
                continue
            c = _restore(problem, anchor, c, target)
            value, eq_res, ineq_res = evaluate(problem, c)
            restored += 1
        elif ok:
            converged += 1
        if eq_res > cfg.tol or ineq_res > target:
            values.append(None)
            continue
        values.append(value)
        if best is None or value > best[0]:
            best = (value, c, eq_res, ineq_res)
    if best is None:
        raise InfeasibleProblemError(
            f"infeasible: no feasible point in {cfg.starts} starts "
            f"(smallest inequality residual {closest[0]:.3g})",
            best_point=closest[1], max_eq_residual=closest[2], max_ineq_residual=closest[0])
    value, c, eq_res, ineq_res = best
    log.debug("%s: best %.6f, %d/%d converged, %d restored",
              problem.name, value, converged, cfg.starts, restored)
    return OptResult(best_point=c, best_value=value, max_eq_residual=eq_res,
                     max_ineq_residual=ineq_res, starts_run=cfg.starts,
                     converged_count=converged, restored_count=restored, values=values)
