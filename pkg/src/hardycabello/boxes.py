"""Two-input/two-output bipartite correlation boxes.

A box is stored as an array ``p[x, y, a, b] = P(ab|xy)``.  Flattened row-major
this is the 4x4 matrix with rows ordered ``xy = 00, 01, 10, 11`` and columns
``ab = 00, 01, 10, 11``, the layout used for every matrix in this package
(see :data:`ROW_ORDER`).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

ROW_ORDER = ((0, 0), (0, 1), (1, 0), (1, 1))
"""Order of the (x, y) rows and of the (a, b) columns of a box matrix."""

SIMPLEX_SUM_TOL = 1e-9
SIMPLEX_NEG_TOL = 1e-12
NS_TOL = 1e-9

HARDY_DIM = 6
CABELLO_DIM = 11


class SimplexError(ValueError):
    """Coefficient vector is not on the probability simplex."""


class SignalingBoxError(ValueError):
    """Box marginals depend on the remote party's input."""


class InfeasibleParametersError(ValueError):
    """NS parameters outside the positivity band."""


@dataclass(frozen=True, eq=False)
class JointBox:
    """Conditional distribution P(ab|xy), indexed ``p[x, y, a, b]``."""

    p: np.ndarray

    def __post_init__(self):
        arr = np.array(self.p, dtype=float)
        if arr.shape == (4, 4) or arr.shape == (16,):
            arr = arr.reshape(2, 2, 2, 2)
        if arr.shape != (2, 2, 2, 2):
            raise ValueError(f"box must have 16 entries, got shape {np.shape(self.p)}")
        arr.setflags(write=False)
        object.__setattr__(self, "p", arr)

    @classmethod
    def from_rows(cls, rows) -> "JointBox":
        return cls(np.asarray(rows, dtype=float).reshape(4, 4))

    def as_matrix(self) -> np.ndarray:
        return self.p.reshape(4, 4).copy()

    def to_list(self) -> list[float]:
        """16 values, row-major in (xy, ab) order."""
        return [float(v) for v in self.p.ravel()]

    def prob(self, a: int, b: int, x: int, y: int) -> float:
        return float(self.p[x, y, a, b])

    def __eq__(self, other):
        return isinstance(other, JointBox) and np.array_equal(self.p, other.p)

    def __hash__(self):
        return hash(self.p.tobytes())


@dataclass(frozen=True)
class NSParams:
    """The eight free parameters of a no-signaling box.

    ``e1..e4`` are ``P(00|xy)`` for the rows 00, 01, 10, 11; ``f1, f2`` are
    Alice's ``P(a=0|x)`` for x = 0, 1 and ``g1, g2`` Bob's ``P(b=0|y)``.
    """

    e1: float
    e2: float
    e3: float
    e4: float
    f1: float
    f2: float
    g1: float
    g2: float

    def as_array(self) -> np.ndarray:
        return np.array([self.e1, self.e2, self.e3, self.e4,
                         self.f1, self.f2, self.g1, self.g2])

    @classmethod
    def from_array(cls, values) -> "NSParams":
        return cls(*(float(v) for v in values))

    def row_triples(self) -> list[tuple[float, float, float]]:
        """(e, f, g) for each matrix row, in ROW_ORDER."""
        return [(self.e1, self.f1, self.g1), (self.e2, self.f1, self.g2),
                (self.e3, self.f2, self.g1), (self.e4, self.f2, self.g2)]


@dataclass(frozen=True)
class Marginals:
    """``pA[x, a] = P(a|x)`` and ``pB[y, b] = P(b|y)``."""

    pA: np.ndarray
    pB: np.ndarray


@dataclass(frozen=True)
class ValidityReport:
    positivity: float
    normalization: float
    no_signaling: float
    tol: float

    @property
    def valid(self) -> bool:
        return max(self.positivity, self.normalization, self.no_signaling) <= self.tol

    def to_dict(self) -> dict:
        return {
            "positivity_violation": self.positivity,
            "normalization_residual": self.normalization,
            "no_signaling_residual": self.no_signaling,
            "tol": self.tol,
            "valid": self.valid,
        }


def _check_bit(*bits):
    for v in bits:
        if v not in (0, 1):
            raise ValueError(f"expected a bit, got {v!r}")


def local_vertex(alpha: int, beta: int, gamma: int, delta: int) -> JointBox:
    """Deterministic box with a = alpha*x ^ beta and b = gamma*y ^ delta."""
    _check_bit(alpha, beta, gamma, delta)
    p = np.zeros((2, 2, 2, 2))
    for x, y in itertools.product((0, 1), repeat=2):
        p[x, y, (alpha * x) ^ beta, (gamma * y) ^ delta] = 1.0
    return JointBox(p)


def nonlocal_vertex(alpha: int, beta: int, gamma: int) -> JointBox:
    """PR-type box, uniform on outcomes with a ^ b = xy ^ alpha*x ^ beta*y ^ gamma."""
    _check_bit(alpha, beta, gamma)
    p = np.zeros((2, 2, 2, 2))
    for x, y, a, b in itertools.product((0, 1), repeat=4):
        if a ^ b == (x * y) ^ (alpha * x) ^ (beta * y) ^ gamma:
            p[x, y, a, b] = 0.5
    return JointBox(p)


PR_BOX = nonlocal_vertex(0, 0, 0)

# Vertex labels of the two decompositions, in coefficient order.
HARDY_VERTEX_LABELS = ("L0101", "L0111", "L1000", "L1011", "L1101", "N000")
CABELLO_VERTEX_LABELS = HARDY_VERTEX_LABELS + ("L0001", "L0010", "L1001", "L1010", "N110")


def vertex_from_label(label: str) -> JointBox:
    bits = [int(ch) for ch in label[1:]]
    return local_vertex(*bits) if label[0] == "L" else nonlocal_vertex(*bits)


def check_simplex(c, dim: int) -> np.ndarray:
    """Validate a coefficient vector and clip tiny negatives to zero."""
    arr = np.asarray(c, dtype=float).ravel()
    if arr.shape != (dim,):
        raise SimplexError(f"expected {dim} coefficients, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise SimplexError("coefficients must be finite")
    if arr.min() < -SIMPLEX_NEG_TOL:
        raise SimplexError(f"negative coefficient {arr.min():.3g}")
    if abs(arr.sum() - 1.0) > SIMPLEX_SUM_TOL:
        raise SimplexError(f"coefficients sum to {arr.sum():.12g}, not 1")
    return np.clip(arr, 0.0, None)


def _hardy_matrix(c) -> np.ndarray:
    c1, c2, c3, c4, c5, c6 = c
    h = c6 / 2
    return np.array([
        [c3 + h, c4, 0.0, c1 + c2 + c5 + h],
        [c3 + c4 + h, 0.0, c2, c1 + c5 + h],
        [h, c5, c3, c1 + c2 + c4 + h],
        [0.0, c5 + h, c2 + c3 + c4 + h, c1],
    ])


def _cabello_matrix(c) -> np.ndarray:
    c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11 = c
    h6, h11 = c6 / 2, c11 / 2
    return np.array([
        [c3 + c8 + c10 + h6 + h11, c4 + c7 + c9, 0.0, c1 + c2 + c5 + h6 + h11],
        [c3 + c4 + h6, c7 + c8 + c9 + c10 + h11, c2 + h11, c1 + c5 + h6],
        [c8 + h6, c5 + c7 + h11, c3 + c10 + h11, c1 + c2 + c4 + c9 + h6],
        [0.0, c5 + c7 + c8 + h6 + h11, c2 + c3 + c4 + h6 + h11, c1 + c9 + c10],
    ])


def hardy_box(c) -> JointBox:
    """Box of the six-vertex Hardy decomposition with weights ``c``.

    The result has ``P(01|01) = P(00|11) = P(10|00) = 0`` and
    ``P(00|10) = c6 / 2``.
    """
    return JointBox(_hardy_matrix(check_simplex(c, HARDY_DIM)))


def cabello_box(c) -> JointBox:
    """Box of the eleven-vertex Cabello decomposition with weights ``c``.

    ``P(00|11) = P(10|00) = 0``; the first six weights reproduce the Hardy
    box, the remaining five add four local vertices and the N110 PR box.
    """
    return JointBox(_cabello_matrix(check_simplex(c, CABELLO_DIM)))


def _linear_map(matrix_fn, dim) -> np.ndarray:
    return np.stack([matrix_fn(np.eye(dim)[i]).ravel() for i in range(dim)])


# Rows are the flattened boxes of the unit coefficient vectors, so that
# ``c @ MAP`` is the flattened box for any coefficient batch.
HARDY_MAP = _linear_map(_hardy_matrix, HARDY_DIM)
CABELLO_MAP = _linear_map(_cabello_matrix, CABELLO_DIM)


def box_arrays(c: np.ndarray, linear_map: np.ndarray) -> np.ndarray:
    """Batched boxes ``(..., 2, 2, 2, 2)`` from coefficient arrays ``(..., dim)``."""
    return (np.asarray(c) @ linear_map).reshape(np.shape(c)[:-1] + (2, 2, 2, 2))


def _ns_residual(p: np.ndarray) -> float:
    alice = p.sum(axis=3)  # [x, y, a]
    bob = p.sum(axis=2)    # [x, y, b]
    return float(max(np.abs(alice[:, 0] - alice[:, 1]).max(),
                     np.abs(bob[0] - bob[1]).max()))


def check_box(box: JointBox, tol: float = 1e-9) -> ValidityReport:
    p = box.p
    positivity = max(0.0, float(-p.min()), float(p.max() - 1.0))
    normalization = float(np.abs(p.sum(axis=(2, 3)) - 1.0).max())
    return ValidityReport(positivity, normalization, _ns_residual(p), tol)


def marginals(box: JointBox, tol: float = NS_TOL) -> Marginals:
    residual = _ns_residual(box.p)
    if residual > tol:
        raise SignalingBoxError(f"signaling box: marginal mismatch {residual:.3g}")
    pA = box.p[:, 0].sum(axis=2)
    pB = box.p[0].sum(axis=1)
    return Marginals(pA, pB)


def ns_param_arrays(p: np.ndarray) -> np.ndarray:
    """Batched ``(e1, e2, e3, e4, f1, f2, g1, g2)`` from boxes ``(..., 2, 2, 2, 2)``.

    Marginals are read from the y = 0 rows (Alice) and x = 0 rows (Bob).
    """
    p = np.asarray(p)
    e = p[..., 0, 0].reshape(p.shape[:-4] + (4,))
    f = p[..., :, 0, 0, :].sum(axis=-1)
    g = p[..., 0, :, :, 0].sum(axis=-1)
    return np.concatenate([e, f, g], axis=-1)


def to_ns_params(box: JointBox, tol: float = NS_TOL) -> NSParams:
    marginals(box, tol)  # NS check
    return NSParams.from_array(ns_param_arrays(box.p))


def from_ns_params(params: NSParams, tol: float = 1e-12) -> JointBox:
    rows = []
    for e, f, g in params.row_triples():
        if not (max(0.0, f + g - 1.0) - tol <= e <= min(f, g) + tol):
            raise InfeasibleParametersError(
                f"infeasible parameters: e={e:.6g} outside [max(0, f+g-1), min(f, g)] "
                f"for f={f:.6g}, g={g:.6g}")
        rows.append([e, f - e, g - e, 1.0 + e - f - g])
    return JointBox.from_rows(rows)


def hardy_ns_params(c) -> NSParams:
    c1, c2, c3, c4, c5, c6 = check_simplex(c, HARDY_DIM)
    e1 = c3 + c6 / 2
    e2 = c3 + c4 + c6 / 2
    return NSParams(e1=e1, e2=e2, e3=c6 / 2, e4=0.0, f1=e2,
                    f2=c5 + c6 / 2, g1=e1, g2=c2 + e2)


def cabello_ns_params(c) -> NSParams:
    c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11 = check_simplex(c, CABELLO_DIM)
    e1 = c3 + c8 + c10 + (c6 + c11) / 2
    e2 = c3 + c4 + c6 / 2
    e3 = c8 + c6 / 2
    return NSParams(e1=e1, e2=e2, e3=e3, e4=0.0,
                    f1=e1 + c4 + c7 + c9,
                    f2=e3 + c5 + c7 + c11 / 2,
                    g1=e1,
                    g2=e2 + c2 + c11 / 2)
