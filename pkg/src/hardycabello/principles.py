"""Information causality, macroscopic locality and local orthogonality tests.

Every evaluator returns signed residuals: a value ``<= 0`` means the
inequality holds.  The ``*_values`` kernels work on batches (leading axes)
and are what the optimizer calls; the ``*_residuals`` wrappers return a
labelled :class:`ResidualSet` for a single box or coefficient vector.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .boxes import (
    JointBox,
    NSParams,
    cabello_ns_params,
    hardy_ns_params,
    ns_param_arrays,
)

FEASIBILITY_TOL = 1e-8
ML_DENOM_FLOOR = 1e-12


@dataclass(frozen=True)
class ResidualSet:
    name: str
    labels: tuple[str, ...]
    values: tuple[float, ...]
    tol: float = FEASIBILITY_TOL

    @property
    def max(self) -> float:
        return max(self.values) if self.values else float("-inf")

    @property
    def feasible(self) -> bool:
        return self.max <= self.tol

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "feasible": self.feasible,
            "max": self.max,
            "residuals": [{"label": k, "value": v} for k, v in zip(self.labels, self.values)],
        }


def _make_set(name, labels, values) -> ResidualSet:
    values = tuple(float(v) for v in np.asarray(values).ravel())
    if not all(np.isfinite(values)):
        raise FloatingPointError(f"{name}: non-finite residual")
    return ResidualSet(name, tuple(labels), values)


# --- information causality -------------------------------------------------

IC_INDICES = tuple(itertools.product((0, 1), repeat=3))  # (alpha, beta, gamma)
IC_LABELS = tuple(
    f"{d} a={al} b={be} g={ga}" for d in ("A->B", "B->A") for al, be, ga in IC_INDICES
)


def _ic_masks() -> np.ndarray:
    masks = np.zeros((len(IC_INDICES), 2, 2, 2, 2))
    for k, (al, be, ga) in enumerate(IC_INDICES):
        for x, y, a, b in itertools.product((0, 1), repeat=4):
            if a ^ b == (x * y) ^ (al * x) ^ (be * y) ^ ga:
                masks[k, x, y, a, b] = 1.0
    return masks


_IC_MASKS = _ic_masks()


def ic_values(p: np.ndarray) -> np.ndarray:
    """All 16 IC residuals, A->B block then B->A block, (alpha, beta, gamma) inner.

    Each residual is ``sum_y [sum_x P(a^b = target | xy) - 1]^2 - 1`` (A->B) or
    the same with x and y swapped (B->A).
    """
    success = np.einsum("kxyab,...xyab->...kxy", _IC_MASKS, p)
    a_to_b = ((success.sum(axis=-2) - 1.0) ** 2).sum(axis=-1) - 1.0
    b_to_a = ((success.sum(axis=-1) - 1.0) ** 2).sum(axis=-1) - 1.0
    return np.concatenate([a_to_b, b_to_a], axis=-1)


# gamma = 0 entries; the gamma = 1 residuals coincide on normalized boxes.
IC_DISTINCT = tuple(i for i, (_, _, ga) in enumerate(IC_INDICES * 2) if ga == 0)


def ic_residuals(box: JointBox) -> ResidualSet:
    return _make_set("IC", IC_LABELS, ic_values(box.p))


# --- macroscopic locality --------------------------------------------------

_SIGN = np.array([1.0, -1.0])
_ML_SIGNS = np.array([[1.0, 1.0], [1.0, -1.0]])


def ml_correlators(p: np.ndarray):
    """Return ``(C_x, C_y, C_xy)``; C_x is read at y = 0 and C_y at x = 0."""
    cx = np.einsum("...xab,a->...x", p[..., :, 0, :, :], _SIGN)
    cy = np.einsum("...yab,b->...y", p[..., 0, :, :, :], _SIGN)
    cxy = np.einsum("...xyab,a,b->...xy", p, _SIGN, _SIGN)
    return cx, cy, cxy


def ml_values(p: np.ndarray) -> np.ndarray:
    """``|sum_xy (-1)^xy asin(D_xy)| - pi`` with a trailing axis of length 1."""
    cx, cy, cxy = ml_correlators(p)
    vx = np.maximum(1.0 - cx**2, ML_DENOM_FLOOR)
    vy = np.maximum(1.0 - cy**2, ML_DENOM_FLOOR)
    denom = np.sqrt(vx[..., :, None] * vy[..., None, :])
    d = np.clip((cxy - cx[..., :, None] * cy[..., None, :]) / denom, -1.0, 1.0)
    total = (_ML_SIGNS * np.arcsin(d)).sum(axis=(-2, -1))
    return (np.abs(total) - np.pi)[..., None]


def ml_residual(box: JointBox) -> ResidualSet:
    return _make_set("ML", ("|sum asin D| - pi",), ml_values(box.p))


# --- local orthogonality ---------------------------------------------------

def lo_hardy_values(params: np.ndarray) -> np.ndarray:
    """Ten reduced LO inequalities for Hardy boxes; ``params`` is ``(..., 8)``."""
    e1, e2, e3, _e4, _f1, f2, _g1, g2 = np.moveaxis(np.asarray(params), -1, 0)
    return np.stack([
        e3**2 + 2 * e2 * g2 - g2**2 - e2**2,
        e3**2 + 2 * e1 * g2 - e1**2 - g2**2,
        e3**2 + (e3 - e1) * (1 - e2 - f2),
        e3**2 + (e3 - e2) * (1 - f2 - g2),
        e2 * (e3 + f2 - e2) + (e3 - f2) * g2,
        e1 * (f2 - e3) + e3 * (e3 + g2) - f2 * g2,
        (g2 - e2) * (f2 + g2 - 1) + 2 * e1 * e3 - e1**2,
        e3 * (1 + f2 - g2) + e2 * (f2 + g2 - 1) - f2**2,
        e3**2 + (f2 - e3) * (f2 + g2 - 1) - (e1 - e2) ** 2,
        e1 * (e3 - f2 - g2) + e2 * (-1 + e1 - e3 + f2 + g2) + e3,
    ], axis=-1)


def lo_cabello_values(params: np.ndarray) -> np.ndarray:
    """Eight reduced LO inequalities for Cabello boxes; ``params`` is ``(..., 8)``."""
    e1, e2, e3, _e4, f1, f2, _g1, g2 = np.moveaxis(np.asarray(params), -1, 0)
    return np.stack([
        e3 * (1 + e1 - f1 - g2) + (1 + e2 + e3 - f1 - f2 - g2) * e2 - e1
        + (e1 + f2 + g2 - 1) * g2,
        e2**2 + (1 - f1 - g2) * e3 + (1 + e1 + e3 - 2 * f1 - f2 - g2) * e2 - e1**2
        + (e3 + f1 - f2) * e1 + (f1 + f2) * (f2 + g2) - (f1 + f2),
        (e2 + e3) * (e3 - f1) + 2 * e2 * g2 - g2**2,
        e2**2 + (e2 + 2 * f2 - f1) * e3 - e1 * e2 + (1 - f2) * e1 - f2**2 + (f2 - 1) * f1,
        e2**2 + e3 * (1 + f2 - f1 - g2) + e3 * e2 + e2 * (1 - f1 - f2 - g2)
        + e1 * (g2 - f1) + f1**2 + f2 * (f1 + g2 - 1) - f1,
        e3**2 - e3 * f1 + e2 * e3 + e2 * (2 - 2 * f1 - f2) + e1 * (1 - f2 - g2)
        + f1**2 + f1 * (2 * g2 + f2 - 2) + (f2 - 1) * g2,
        e3**2 + (e2 - f1) * e3 + e2 * (1 - 2 * f1 + g2) + f1 * (f1 + g2) - f1 - g2**2,
        (e2 + e1) * (e3 + e2 + 1 - e1 - g2) + f1 * (f1 + 2 * g2 - 2 * e2 - 2),
    ], axis=-1)


LO_HARDY_LABELS = tuple(f"LO-H{i}" for i in range(1, 11))
LO_CABELLO_LABELS = tuple(f"LO-C{i}" for i in range(1, 9))


def lo_hardy_residuals(c) -> ResidualSet:
    params = hardy_ns_params(c).as_array()
    return _make_set("LO", LO_HARDY_LABELS, lo_hardy_values(params))


def lo_cabello_residuals(c) -> ResidualSet:
    params = cabello_ns_params(c).as_array()
    return _make_set("LO", LO_CABELLO_LABELS, lo_cabello_values(params))


def lo_residuals_from_params(params: NSParams, family: str) -> ResidualSet:
    """LO residuals straight from NS parameters (``family`` is "hardy" or "cabello")."""
    if family == "hardy":
        return _make_set("LO-Hardy", LO_HARDY_LABELS, lo_hardy_values(params.as_array()))
    if family == "cabello":
        return _make_set("LO-Cabello", LO_CABELLO_LABELS, lo_cabello_values(params.as_array()))
    raise ValueError(f"unknown LO family {family!r}")


def lo_box_values(p: np.ndarray, family: str) -> np.ndarray:
    params = ns_param_arrays(p)
    return lo_hardy_values(params) if family == "hardy" else lo_cabello_values(params)
