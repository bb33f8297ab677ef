"""Derivative-free sampling of the decomposition polytope.

The sampler gives lower-bound witnesses for each case's optimum without any
gradient or local search, and a second IC evaluator written against individual matrix
entries cross-checks :func:`hardycabello.principles.ic_values`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .optimizer import project_to_polytope
from .scenarios import DEFAULT_EPS_Q, Argument, LRSelection, Principle, build_problem

BATCH_SIZE = 10_000
PROJECTION_ITERS = 100
EQ_DISCARD_TOL = 1e-6
FACE_SLACK = 1e-6
ORACLE_TOL = 1e-14
ELITE_SIZE = 32
CONCENTRATION_RANGE = (10.0, 1e4)
ELITE_FLOOR = 0.01


@dataclass(frozen=True)
class OracleResult:
    best_value: Optional[float]
    best_point: Optional[tuple]
    samples: int
    feasible_fraction: float

    @property
    def found(self) -> bool:
        return self.best_value is not None

    def describe(self) -> str:
        return "none found" if self.best_value is None else f"{self.best_value:.6f}"

    def to_dict(self) -> dict:
        return {
            "best_value": self.best_value,
            "best_point": list(self.best_point) if self.best_point is not None else None,
            "samples": self.samples,
            "feasible_fraction": self.feasible_fraction,
            "source": "oracle",
        }


def _draw_global(rng, size, dim):
    """Dirichlet(1) points on the simplex, on random faces and next to them.

    Rows cycle through four kinds: two on the whole simplex, one exactly on a
    random face and one next to a random face.  Faces have a support size
    drawn uniformly from 1..dim and a uniform subset of that size.  For rows
    next to a face, off-support coordinates start below ``FACE_SLACK`` and are
    capped there during projection, so coordinates that must stay positive
    (q1 for Cabello) can.  Returns the points and per-point upper caps.
    """
    kind = np.arange(size) % 4
    k = rng.integers(1, dim + 1, size=size)
    ranks = rng.random((size, dim)).argsort(axis=-1).argsort(axis=-1)
    support = (kind % 2 == 0)[:, None] | (ranks < k[:, None])
    weights = rng.standard_exponential((size, dim)) * support
    weights /= weights.sum(axis=-1, keepdims=True)
    slack = np.where(kind == 3, FACE_SLACK, 0.0)[:, None]
    off = slack * rng.random((size, dim))
    return np.where(support, weights, off), np.where(support, 1.0, slack)


def _draw_local(rng, size, elite):
    """Dirichlet draws centred on elite points, concentration log-uniform."""
    centre = elite[np.arange(size) % len(elite)]
    kappa = np.exp(rng.uniform(*np.log(CONCENTRATION_RANGE), size=size))
    alpha = kappa[:, None] * centre + ELITE_FLOOR
    weights = rng.standard_gamma(alpha)
    weights = np.maximum(weights, np.finfo(float).tiny)
    return weights / weights.sum(axis=-1, keepdims=True), np.ones_like(weights)


def sample_max(argument, principle, lr: LRSelection, n: int, seed: int = 1, *,
               eps_q: float = DEFAULT_EPS_Q, lr_rows: str = "published",
               batch_size: int = BATCH_SIZE) -> OracleResult:
    """Largest objective among ``n`` feasible samples.

    The first half of the budget draws from the whole simplex and near random
    faces (``_draw_global``); the second half draws around the best feasible
    points found so far (``_draw_local``).  Every draw is moved onto the
    equality constraints by alternating projection and clipping.  Samples
    still off the equalities by more than ``EQ_DISCARD_TOL`` are dropped, the
    rest are kept when every inequality holds to ``ORACLE_TOL``, a stricter
    cut than the optimizer tolerance so near-tight slack is not rewarded.  No
    derivatives or local search are used.

    Each batch uses its own generator seeded by ``(seed, batch index)`` and
    the reduction runs in batch order (first maximum wins), so the result is
    deterministic given ``seed``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    argument, principle = Argument(argument), Principle(principle)
    problem = build_problem(argument, principle, lr, eps_q=eps_q, lr_rows=lr_rows)
    A, b = problem.eq_system()
    lo, hi = problem.lower, problem.upper
    sizes = [min(batch_size, n - s) for s in range(0, n, batch_size)]
    global_samples = (n + 1) // 2

    best_value, best_point, feasible, done = None, None, 0, 0
    elite_vals = np.empty(0)
    elite_pts = np.empty((0, problem.dim))
    for index, size in enumerate(sizes):
        rng = np.random.default_rng([seed, index])
        if done < global_samples or not len(elite_pts):
            pts, caps = _draw_global(rng, size, problem.dim)
        else:
            pts, caps = _draw_local(rng, size, elite_pts)
        done += size
        pts = project_to_polytope(pts, A, b, lo, np.minimum(hi, caps), max_iter=PROJECTION_ITERS)
        keep = np.abs(pts @ A.T - b).max(axis=-1) <= EQ_DISCARD_TOL
        keep &= problem.inequality_residuals(pts).max(axis=-1) <= ORACLE_TOL
        feasible += int(keep.sum())
        if not keep.any():
            continue
        vals = problem.objective(pts[keep])
        i = int(np.argmax(vals))
        if best_value is None or vals[i] > best_value:
            best_value, best_point = float(vals[i]), tuple(float(v) for v in pts[keep][i])
        # stable sort keeps earlier samples first among equal values
        pool_vals = np.concatenate([elite_vals, vals])
        pool_pts = np.concatenate([elite_pts, pts[keep]])
        order = np.argsort(-pool_vals, kind="stable")[:ELITE_SIZE]
        elite_vals, elite_pts = pool_vals[order], pool_pts[order]
    return OracleResult(best_value, best_point, n, feasible / n)


# --- independent IC evaluator ----------------------------------------------

def transcribed_ic(p) -> np.ndarray:
    """IC residuals from explicit sums of matrix entries.

    ``p`` has shape ``(..., 2, 2, 2, 2)``; in its 4x4 view rows are inputs xy = 00, 01, 10, 11 and columns outputs ab = 00, 01, 10, 11.
    Returns four residuals: (alpha, beta) = (0, 0) for A->B and B->A, then
    (1, 1) for A->B and B->A, all with gamma = 0.
    """
    p = np.asarray(p, dtype=float)
    m = p.reshape(p.shape[:-4] + (4, 4))
    p11, p12, p13, p14 = np.moveaxis(m[..., 0, :], -1, 0)
    p21, p22, p23, p24 = np.moveaxis(m[..., 1, :], -1, 0)
    p31, p32, p33, p34 = np.moveaxis(m[..., 2, :], -1, 0)
    p41, p42, p43, p44 = np.moveaxis(m[..., 3, :], -1, 0)
    e1 = p11 + p14 + p31 + p34 - 1
    e2 = p21 + p24 + p42 + p43 - 1
    e3 = p11 + p14 + p21 + p24 - 1
    e4 = p31 + p34 + p42 + p43 - 1
    f1 = p11 + p14 + p32 + p33 - 1
    f2 = p22 + p23 + p42 + p43 - 1
    f3 = p11 + p14 + p22 + p23 - 1
    f4 = p32 + p33 + p42 + p43 - 1
    return np.stack([e1**2 + e2**2 - 1, e3**2 + e4**2 - 1,
                     f1**2 + f2**2 - 1, f3**2 + f4**2 - 1], axis=-1)


# positions of the transcribed residuals inside ``ic_values`` output
TRANSCRIBED_IC_INDEX = (0, 8, 6, 14)
