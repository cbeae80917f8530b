"""Coefficient encoding of two-component cubic NLS systems.

A system is given by twelve real couplings ``lam[0..11]`` (lambda_1..lambda_12):

    F1 = l1|u1|^2 u1 + l2|u1|^2 u2 + l3 u1^2 conj(u2) + l4|u2|^2 u1 + l5 u2^2 conj(u1) + l6|u2|^2 u2
    F2 = l7|u1|^2 u1 + l8|u1|^2 u2 + l9 u1^2 conj(u2) + l10|u2|^2 u1 + l11 u2^2 conj(u1) + l12|u2|^2 u2

The same system is described by a real 3x3 matrix ``A`` and a 3-vector ``V``;
the map between the two is a linear bijection of R^12.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, SingularChange

__all__ = [
    "CubicSystem",
    "MatrixVectorRep",
    "PairState",
    "QuadVector",
    "LinearChange",
    "GaugeObstruction",
    "MODEL_SYSTEM",
    "to_matrix_vector",
    "from_matrix_vector",
    "eval_nonlinearity",
    "quad_vector",
    "dmat",
    "apply_change",
    "change_state",
    "gauge_obstruction",
    "gauge_obstruction_lambda",
    "quad_identity_residual",
    "gauge_identity_residual",
    "parse_system",
]


@dataclass(frozen=True)
class CubicSystem:
    """Twelve real coupling coefficients, stored in printed order."""

    lam: np.ndarray

    def __post_init__(self):
        lam = np.array(self.lam, dtype=float).reshape(-1)
        if lam.shape != (12,):
            raise ValueError(f"expected 12 coefficients, got {lam.size}")
        if not np.all(np.isfinite(lam)):
            raise ValueError("coefficients must be finite")
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)

    def to_json(self) -> dict:
        return {"lambda": [float(x) for x in self.lam]}

    def __eq__(self, other):
        return isinstance(other, CubicSystem) and np.array_equal(self.lam, other.lam)

    def __hash__(self):
        return hash(self.lam.tobytes())


@dataclass(frozen=True)
class MatrixVectorRep:
    A: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        V = np.array(self.V, dtype=float).reshape(-1)
        if A.shape != (3, 3) or V.shape != (3,):
            raise ValueError("expected a 3x3 matrix and a 3-vector")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(V))):
            raise ValueError("representation entries must be finite")
        A.setflags(write=False)
        V.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "V", V)

    def to_json(self) -> dict:
        return {"A": self.A.tolist(), "V": self.V.tolist()}

    def __eq__(self, other):
        return (
            isinstance(other, MatrixVectorRep)
            and np.array_equal(self.A, other.A)
            and np.array_equal(self.V, other.V)
        )

    def __hash__(self):
        return hash((self.A.tobytes(), self.V.tobytes()))


class PairState(NamedTuple):
    A1: complex
    A2: complex


class QuadVector(NamedTuple):
    rho1: float
    R: float
    rho2: float
    I: float


@dataclass(frozen=True)
class LinearChange:
    """Real invertible 2x2 matrix acting as ``v = M u``."""

    M: np.ndarray

    def __post_init__(self):
        M, _ = _as_change(self.M)
        M = M.copy()
        M.setflags(write=False)
        object.__setattr__(self, "M", M)

    @property
    def det(self) -> float:
        return float(self.M[0, 0] * self.M[1, 1] - self.M[0, 1] * self.M[1, 0])

    def inverse(self) -> "LinearChange":
        return LinearChange(np.linalg.inv(self.M))

    def __matmul__(self, other: "LinearChange") -> "LinearChange":
        return LinearChange(self.M @ other.M)


@dataclass(frozen=True)
class GaugeObstruction:
    B: np.ndarray

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.B, dtype=dtype)


MODEL_SYSTEM = CubicSystem(np.eye(12)[5] + np.eye(12)[6])


def to_matrix_vector(sys: CubicSystem) -> MatrixVectorRep:
    l1, l2, l3, l4, l5, l6, l7, l8, l9, l10, l11, l12 = sys.lam
    A = np.array(
        [
            [l2 - l3, -l1 + l8 - l9, -l7],
            [l5, -l3 + l11, -l9],
            [l6, -l4 + l5 + l12, -l10 + l11],
        ]
    )
    V = np.array([l8 - 2 * l9, 0.5 * (-l2 + 2 * l3 - l10 + 2 * l11), l4 - 2 * l5])
    return MatrixVectorRep(A, V)


def from_matrix_vector(rep: MatrixVectorRep) -> CubicSystem:
    """Rebuild the couplings from ``(A, V)``.

    Expands ``Re(conj(u1) u2) u_j`` and the quadratic potential
    ``V(u) = q1|u1|^2 + 2 q2 Re(conj(u1) u2) + q3|u2|^2`` into monomials.
    """
    (a11, a12, a13), (a21, a22, a23), (a31, a32, a33) = rep.A
    q1, q2, q3 = rep.V
    half_tr = 0.5 * (a11 + a22 + a33)
    lam = [
        -(a12 + a23) + q1,
        2 * a11 - half_tr + q2,
        a11 - half_tr + q2,
        2 * a21 + q3,
        a21,
        a31,
        -a13,
        -2 * a23 + q1,
        -a23,
        -2 * a33 + half_tr + q2,
        -a33 + half_tr + q2,
        a21 + a32 + q3,
    ]
    return CubicSystem(np.array(lam))


def _pair(s):
    A1, A2 = s
    return np.asarray(A1, dtype=complex), np.asarray(A2, dtype=complex)


def eval_nonlinearity(sys: CubicSystem, s):
    """Return ``(F1, F2)`` at ``s = (A1, A2)``; broadcasts over array-valued amplitudes."""
    l = sys.lam
    A1, A2 = _pair(s)
    r1 = (A1 * A1.conj()).real
    r2 = (A2 * A2.conj()).real
    m12 = A1 * A1 * A2.conj()
    m21 = A2 * A2 * A1.conj()
    F1 = (l[0] * r1 + l[3] * r2) * A1 + (l[1] * r1 + l[5] * r2) * A2 + l[2] * m12 + l[4] * m21
    F2 = (l[6] * r1 + l[9] * r2) * A1 + (l[7] * r1 + l[11] * r2) * A2 + l[8] * m12 + l[10] * m21
    return F1, F2


def quad_vector(s) -> QuadVector:
    A1, A2 = _pair(s)
    z = A1.conj() * A2
    return QuadVector(np.abs(A1) ** 2, 2 * z.real, np.abs(A2) ** 2, 2 * z.imag)


def _as_change(M) -> tuple[np.ndarray, float]:
    if isinstance(M, LinearChange):
        M = M.M
    M = np.asarray(M, dtype=float)
    if M.shape != (2, 2):
        raise ValueError("a change of variables is a real 2x2 matrix")
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    if abs(det) <= 1e-12 * max(np.max(np.abs(M)) ** 2, 1e-300):
        raise SingularChange(f"change of variables is singular (det={det:g})")
    return M, det


def dmat(M) -> tuple[np.ndarray, np.ndarray]:
    """Return the 3x3 transport matrix ``D(M)`` and its inverse (both in SL3)."""
    M, det = _as_change(M)
    (a, b), (c, d) = M
    D = np.array(
        [
            [d * d, -2 * c * d, c * c],
            [-b * d, a * d + b * c, -a * c],
            [b * b, -2 * a * b, a * a],
        ]
    ) / det
    Dinv = np.array(
        [
            [a * a, 2 * a * c, c * c],
            [a * b, a * d + b * c, c * d],
            [b * b, 2 * b * d, d * d],
        ]
    ) / det
    return D, Dinv


def apply_change(rep: MatrixVectorRep, M) -> MatrixVectorRep:
    """Representation of the system for ``v = M u``."""
    M, det = _as_change(M)
    D, Dinv = dmat(M)
    return MatrixVectorRep(D @ rep.A @ Dinv / det, D @ rep.V / det)


def change_state(M, s):
    """Apply ``(B1, B2) = M (A1, A2)`` to (possibly array-valued) amplitudes."""
    M, _ = _as_change(M)
    A1, A2 = _pair(s)
    return PairState(M[0, 0] * A1 + M[0, 1] * A2, M[1, 0] * A1 + M[1, 1] * A2)


def gauge_obstruction(sys_or_rep) -> GaugeObstruction:
    """Symmetric matrix ``B`` of the ``[[0, i], [-i, 0]]`` identity, from ``A`` alone."""
    rep = sys_or_rep if isinstance(sys_or_rep, MatrixVectorRep) else to_matrix_vector(sys_or_rep)
    a = rep.A
    b12 = -a[0, 1] + 2 * a[1, 2]
    b13 = 2 * a[0, 0] + 2 * a[2, 2]
    b23 = -a[2, 1] + 2 * a[1, 0]
    B = np.array(
        [
            [4 * a[0, 2], b12, b13],
            [b12, -2 * a[1, 1], b23],
            [b13, b23, 4 * a[2, 0]],
        ]
    )
    return GaugeObstruction(B)


def gauge_obstruction_lambda(sys: CubicSystem) -> np.ndarray:
    """Same matrix written directly in the couplings (cross-check form)."""
    l1, l2, l3, l4, l5, l6, l7, l8, l9, l10, l11, l12 = sys.lam
    b12 = l1 - l8 - l9
    b13 = 2 * (l2 - l3 - l10 + l11)
    b23 = l4 + l5 - l12
    return np.array(
        [
            [-4 * l7, b12, b13],
            [b12, 2 * (l3 - l11), b23],
            [b13, b23, 4 * l6],
        ]
    )


def _quad_rows(s):
    q = quad_vector(s)
    return np.stack([q.rho1, q.R, q.rho2], axis=-1), q.I


def quad_identity_residual(sys: CubicSystem, s, h) -> float:
    """|Im(conj(A)^T S F) - (I/2) row A h| with ``S = [[a, b], [b, c]]``, ``h = (a, b, c)``.

    The factor 1/2 comes from ``I = 2 Im(conj(A1) A2)``; with it, the flow
    ``i A' = F`` gives ``d/dt (row h) = I row A h`` since ``d/dt rho = 2 Im(conj(A) F)``.
    """
    a, b, c = np.asarray(h, dtype=float)
    A1, A2 = _pair(s)
    F1, F2 = eval_nonlinearity(sys, (A1, A2))
    lhs = (A1.conj() * (a * F1 + b * F2) + A2.conj() * (b * F1 + c * F2)).imag
    row, I = _quad_rows((A1, A2))
    rhs = 0.5 * I * (row @ (to_matrix_vector(sys).A @ np.array([a, b, c])))
    return float(np.max(np.abs(lhs - rhs)))


def gauge_identity_residual(sys: CubicSystem, s) -> float:
    """|Im(conj(A)^T [[0, i], [-i, 0]] F) + row B row^T / 4|.

    For the model system the left side is ``rho1^2 - rho2^2`` while
    ``B = diag(-4, 0, 4)``, which fixes the constant at ``-1/4``.
    """
    A1, A2 = _pair(s)
    F1, F2 = eval_nonlinearity(sys, (A1, A2))
    lhs = (A1.conj() * 1j * F2 - A2.conj() * 1j * F1).imag
    row, _ = _quad_rows((A1, A2))
    B = gauge_obstruction(sys).B
    rhs = -0.25 * np.einsum("...i,ij,...j->...", row, B, row)
    return float(np.max(np.abs(lhs - rhs)))


def parse_system(obj) -> CubicSystem:
    """Accept ``{"lambda": [...]}`` or ``{"A": [[...]], "V": [...]}`` (or a JSON string)."""
    if isinstance(obj, CubicSystem):
        return obj
    if isinstance(obj, MatrixVectorRep):
        return from_matrix_vector(obj)
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, dict):
        raise ConfigError("system must be a JSON object")
    keys = set(obj)
    try:
        if keys == {"lambda"}:
            return CubicSystem(obj["lambda"])
        if keys == {"A", "V"}:
            return from_matrix_vector(MatrixVectorRep(obj["A"], obj["V"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"malformed system: {exc}") from exc
    raise ConfigError(f"system needs keys 'lambda' or 'A','V'; got {sorted(keys)}")
