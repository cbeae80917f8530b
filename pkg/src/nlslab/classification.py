"""Structural conditions on the matrix part of a cubic system.

The cone ``P+ = {(a, b, c) : ac - b^2 > 0}`` is open; tests against it report a
third outcome, ``"boundary"``, when the restricted form is within tolerance of 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import DegenerateBasis, NotPositive
from .system_repr import (
    CubicSystem,
    MatrixVectorRep,
    PairState,
    eval_nonlinearity,
    parse_system,
    to_matrix_vector,
)

__all__ = [
    "CONE_FORM",
    "EigenStructure",
    "ConeResult",
    "HermitianCandidate",
    "D0Verdict",
    "FamilyReport",
    "ConditionReport",
    "eigen3",
    "cone_test",
    "subspace_meets_Pplus",
    "normal_criterion",
    "check_assumption",
    "check_S1",
    "check_H0",
    "d0_quantity",
    "check_D0_candidate",
    "classify_standard_family",
    "classify",
    "normalize_gamma",
]

# q(a, b, c) = ac - b^2
CONE_FORM = np.array([[0.0, 0.0, 0.5], [0.0, -1.0, 0.0], [0.5, 0.0, 0.0]])
CONE_TOL = 1e-10
GRAM_TOL = 1e-12


def _as_A(obj) -> np.ndarray:
    if isinstance(obj, MatrixVectorRep):
        return obj.A
    if isinstance(obj, CubicSystem):
        return to_matrix_vector(obj).A
    return np.asarray(obj, dtype=float)


def _as_rep(obj) -> MatrixVectorRep:
    if isinstance(obj, MatrixVectorRep):
        return obj
    if isinstance(obj, CubicSystem):
        return to_matrix_vector(obj)
    A = np.asarray(obj, dtype=float)
    if A.shape == (3, 3):
        return MatrixVectorRep(A, np.zeros(3))
    return to_matrix_vector(parse_system(obj))


# ---------------------------------------------------------------- eigenvalues


def _cubic_roots(a: float, b: float, c: float) -> np.ndarray:
    """Roots of ``x^3 + a x^2 + b x + c`` by the depressed-cubic formulas."""
    p = b - a * a / 3.0
    q = 2.0 * a**3 / 27.0 - a * b / 3.0 + c
    shift = -a / 3.0
    disc = q * q / 4.0 + p**3 / 27.0
    if disc < 0.0:
        # three distinct real roots: trigonometric form (p < 0 here)
        r = 2.0 * np.sqrt(-p / 3.0)
        arg = np.clip(3.0 * q / (p * r), -1.0, 1.0)
        th = np.arccos(arg) / 3.0
        t = r * np.cos(th - 2.0 * np.pi * np.arange(3) / 3.0)
        roots = (t + shift).astype(complex)
    else:
        sq = np.sqrt(disc)
        t1 = np.cbrt(-q / 2.0 + sq) + np.cbrt(-q / 2.0 - sq)
        # deflate: t^2 + t1 t + (t1^2 + p)
        im2 = 0.75 * t1 * t1 + p
        if im2 >= 0.0:
            im = np.sqrt(im2)
            pair = [complex(-t1 / 2.0, im), complex(-t1 / 2.0, -im)]
        else:
            im = np.sqrt(-im2)
            pair = [complex(-t1 / 2.0 + im), complex(-t1 / 2.0 - im)]
        roots = np.array([t1, *pair], dtype=complex) + shift

    def P(z):
        return ((z + a) * z + b) * z + c

    def dP(z):
        return (3.0 * z + 2.0 * a) * z + b

    # Newton polish; keep a step only when it reduces the residual
    for i in range(3):
        z = roots[i]
        for _ in range(3):
            d = dP(z)
            if d == 0:
                break
            zn = z - P(z) / d
            if abs(P(zn)) < abs(P(z)):
                z = zn
            else:
                break
        if roots[i].imag == 0.0:
            z = complex(z.real, 0.0)
        roots[i] = z
    # restore exact conjugate symmetry of a complex pair
    cplx = [i for i in range(3) if roots[i].imag != 0.0]
    if len(cplx) == 2:
        i, j = cplx
        roots[j] = np.conj(roots[i])
    return roots


@dataclass(frozen=True)
class EigenStructure:
    eig_A: np.ndarray
    eig_A2: np.ndarray
    k: Optional[float] = None
    W_basis: Optional[np.ndarray] = None  # rows are basis vectors
    normal: Optional[np.ndarray] = None

    def residuals(self, A) -> np.ndarray:
        """``|A^2 w + k^2 w| / |w|`` for each basis vector."""
        if self.k is None:
            return np.zeros(0)
        A = np.asarray(A, dtype=float)
        G = A @ A + self.k**2 * np.eye(3)
        return np.linalg.norm(self.W_basis @ G.T, axis=1) / np.linalg.norm(self.W_basis, axis=1)


def eigen3(A) -> EigenStructure:
    """Closed-form eigen-analysis of a real 3x3 matrix.

    ``k`` is set when ``A`` has a pure-imaginary pair ``+-ik`` with ``k > 0``;
    then ``W(-k^2, A^2)`` is two-dimensional and equals ``normal^perp``.
    """
    A = _as_A(A)
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    tr = np.trace(A)
    minors = (
        A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        + A[0, 0] * A[2, 2] - A[0, 2] * A[2, 0]
        + A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1]
    )
    lam = _cubic_roots(-tr, minors, -np.linalg.det(A))
    eig_A2 = lam * lam
    tol = 1e-9 * (1.0 + np.linalg.norm(A, 2))
    k = None
    for z in lam:
        if z.imag > tol and abs(z.real) <= tol:
            k = float(z.imag)
    if k is None:
        return EigenStructure(lam, eig_A2)
    G = A @ A + k * k * np.eye(3)
    _, _, Vt = np.linalg.svd(G)
    normal = Vt[0]
    W = Vt[1:]
    return EigenStructure(lam, eig_A2, k, W, normal)


# ---------------------------------------------------------------- cone tests


class ConeResult(NamedTuple):
    verdict: str  # "inside" | "outside" | "boundary"
    lam_max: float
    maximizer: np.ndarray  # unit vector in the subspace attaining lam_max


def cone_test(basis) -> ConeResult:
    """Restrict ``ac - b^2`` to ``span(basis)`` and inspect its top eigenvalue."""
    B = np.atleast_2d(np.asarray(basis, dtype=float))
    if B.shape[1] != 3 or B.shape[0] == 0 or B.shape[0] > 3:
        raise DegenerateBasis("basis must be 1 to 3 vectors in R^3")
    norms = np.linalg.norm(B, axis=1)
    if np.any(norms == 0) or not np.all(np.isfinite(B)):
        raise DegenerateBasis("zero or non-finite basis vector")
    Bn = B / norms[:, None]
    if np.linalg.det(Bn @ Bn.T) < GRAM_TOL:
        raise DegenerateBasis("basis vectors are (nearly) dependent")
    Q, _ = np.linalg.qr(Bn.T)
    R = Q.T @ CONE_FORM @ Q
    w, V = np.linalg.eigh(R)
    lam_max = float(w[-1])
    x = Q @ V[:, -1]
    if lam_max > CONE_TOL:
        verdict = "inside"
    elif lam_max < -CONE_TOL:
        verdict = "outside"
    else:
        verdict = "boundary"
    return ConeResult(verdict, lam_max, x)


def subspace_meets_Pplus(basis) -> bool:
    """True iff the span meets the open cone; boundary cases return False."""
    return cone_test(basis).verdict == "inside"


def normal_criterion(v) -> float:
    """``v2^2 - 4 v1 v3`` for a unit normal ``v``; positive iff ``v^perp`` meets the cone."""
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    return float(v[1] ** 2 - 4.0 * v[0] * v[2])


def normalize_gamma(x) -> np.ndarray:
    """Scale a cone vector so that ``g1 g3 - g2^2 = 1`` and its first nonzero entry is positive."""
    x = np.asarray(x, dtype=float)
    qv = x[0] * x[2] - x[1] ** 2
    if qv <= 0:
        raise ValueError("vector is not in the open cone")
    g = x / np.sqrt(qv)
    nz = np.flatnonzero(np.abs(g) > 1e-14 * np.abs(g).max())
    if g[nz[0]] < 0:
        g = -g
    return g + 0.0


def check_assumption(rep) -> tuple[bool, Optional[tuple[float, np.ndarray]]]:
    """Decide whether some ``W(-k^2, A^2)`` meets the open cone.

    Returns ``(True, (k, Gamma))`` with ``Gamma`` the maximizer of ``ac - b^2`` on the
    eigenspace, normalized by :func:`normalize_gamma`; otherwise ``(False, None)``.
    """
    es = eigen3(_as_A(rep))
    if es.k is None:
        return False, None
    res = cone_test(es.W_basis)
    if res.verdict != "inside":
        return False, None
    return True, (es.k, normalize_gamma(res.maximizer))


def _kernel_basis(A: np.ndarray) -> np.ndarray:
    _, s, Vt = np.linalg.svd(A)
    tol = 1e-10 * max(1.0, s[0])
    return Vt[s <= tol]


def check_S1(rep) -> bool:
    """``Ker A`` meets the open cone."""
    ker = _kernel_basis(_as_A(rep))
    if len(ker) == 0:
        return False
    return subspace_meets_Pplus(ker)


def check_H0(sys) -> bool:
    """The Hermitian-gauge condition; equivalent to the kernel condition above."""
    return check_S1(_as_rep(sys))


# ---------------------------------------------------------------- dissipation probe


@dataclass(frozen=True)
class HermitianCandidate:
    """``H = [[p, q1 + i q2], [q1 - i q2, r]]``."""

    p: float
    q1: float
    q2: float
    r: float

    @property
    def is_positive(self) -> bool:
        return self.p > 0 and self.r > 0 and self.p * self.r > self.q1**2 + self.q2**2

    def matrix(self) -> np.ndarray:
        return np.array([[self.p, self.q1 + 1j * self.q2], [self.q1 - 1j * self.q2, self.r]])


@dataclass(frozen=True)
class D0Verdict:
    kind: str  # "RefutedWithWitness" | "UndecidedAfterSearch"
    candidate: HermitianCandidate
    witness: Optional[PairState] = None
    value: Optional[float] = None
    n_tested: int = 0

    @property
    def refuted(self) -> bool:
        return self.kind == "RefutedWithWitness"

    def to_json(self) -> dict:
        out = {"kind": self.kind, "n_tested": self.n_tested,
               "candidate": {"p": self.candidate.p, "q1": self.candidate.q1,
                             "q2": self.candidate.q2, "r": self.candidate.r}}
        if self.witness is not None:
            out["witness"] = [[self.witness.A1.real, self.witness.A1.imag],
                              [self.witness.A2.real, self.witness.A2.imag]]
            out["value"] = self.value
        return out


def d0_quantity(sys: CubicSystem, h: HermitianCandidate, s):
    """``Im(conj(A)^T H F(A))`` evaluated exactly (broadcasts over arrays)."""
    A1, A2 = (np.asarray(x, dtype=complex) for x in s)
    F1, F2 = eval_nonlinearity(sys, (A1, A2))
    z = (A1.conj() * (h.p * F1 + (h.q1 + 1j * h.q2) * F2)
         + A2.conj() * ((h.q1 - 1j * h.q2) * F1 + h.r * F2))
    return z.imag


def _d0_grid() -> np.ndarray:
    taus = np.logspace(-3, 3, 25)
    pts = [(1, 0.1j), (1, -0.1j), (1, 10j), (1, -10j)]
    pts += [(1, s * 1j * t) for t in taus for s in (1, -1)]
    pts += [(1, 0), (0, 1)]
    pts += [(1, s * t) for t in taus for s in (1, -1)]
    return np.array(pts, dtype=complex)


def check_D0_candidate(sys, h: HermitianCandidate, samples: int = 1000, seed: int = 0) -> D0Verdict:
    """Search for a state where ``Im(conj(A)^T H F) > 0``; a hit refutes ``H``.

    Not a decision procedure: a negative search returns ``UndecidedAfterSearch``.
    """
    sys = parse_system(sys)
    if not h.is_positive:
        raise NotPositive("Hermitian candidate is not positive definite")
    rng = np.random.default_rng(seed)
    rnd = rng.standard_normal((samples, 2)) + 1j * rng.standard_normal((samples, 2))
    states = np.concatenate([_d0_grid(), rnd])
    vals = d0_quantity(sys, h, (states[:, 0], states[:, 1]))
    size = (np.abs(states[:, 0]) ** 2 + np.abs(states[:, 1]) ** 2) ** 2
    scale = (1.0 + np.abs(sys.lam).max()) * (1.0 + max(abs(h.p), abs(h.q1), abs(h.q2), abs(h.r)))
    hit = np.flatnonzero(vals > 1e-12 * scale * size)
    n = len(states)
    if len(hit) == 0:
        return D0Verdict("UndecidedAfterSearch", h, n_tested=n)
    i = hit[0]
    return D0Verdict("RefutedWithWitness", h, PairState(complex(states[i, 0]), complex(states[i, 1])),
                     float(vals[i]), n)


# ---------------------------------------------------------------- appendix families


@dataclass(frozen=True)
class FamilyReport:
    family: str  # "Elliptic" | "Parabolic" | "Hyperbolic"
    params: dict
    eigen_condition: bool
    cone_condition: bool
    k: Optional[float]

    @property
    def holds(self) -> bool:
        return self.eigen_condition and self.cone_condition

    def to_json(self) -> dict:
        return {"family": self.family, "params": self.params, "k": self.k,
                "eigen_condition": self.eigen_condition,
                "cone_condition": self.cone_condition, "holds": self.holds}


def _floats(d: dict) -> dict:
    return {key: float(v) + 0.0 for key, v in d.items()}


def _close(x, y, tol=1e-10) -> bool:
    return abs(x - y) <= tol


def classify_standard_family(A) -> Optional[FamilyReport]:
    """Match ``A`` against the three appendix templates (first match wins)."""
    a = _as_A(A)
    (a11, a12, a13), (a21, a22, a23), (a31, a32, a33) = a

    if _close(a13, -a11) and _close(a23, -a21) and _close(a33, -a31) and _close(a11 - a31, a22):
        p1 = a22 / 2
        p5 = a11 - p1
        d = a21  # p2 - p3
        s = (a32 - a12) / 4  # p2 + p3
        p4 = -(a12 + a32) / 4
        p2, p3 = (s + d) / 2, (s - d) / 2
        eig = abs(p1) <= 1e-10 and p2 * p2 > p3 * p3
        cone = False
        k = None
        if eig:
            k = 2 * np.sqrt(p2 * p2 - p3 * p3)
            cone = (p5 / (p2 - p3)) ** 2 + (p4 / (p2 + p3)) ** 2 > 1
        params = {"p1": p1, "p2": p2, "p3": p3, "p4": p4, "p5": p5}
        return FamilyReport("Elliptic", _floats(params), bool(eig), bool(cone),
                            None if k is None else float(k))

    zeros = [a11, a21, a31, a22, a33]
    if all(_close(x, 0) for x in zeros) and _close(abs(a23), 1) and _close(abs(a32), 1):
        s2, s1 = float(np.sign(a23)), float(np.sign(a32))
        eig = s1 * s2 == -1
        cone = eig and a13**2 - 4 * s2 * a12 > 0
        params = {"a12": a12, "a13": a13, "sigma1": s1, "sigma2": s2}
        return FamilyReport("Parabolic", _floats(params), bool(eig), bool(cone), 1.0 if eig else None)

    if _close(a12, 0) and _close(a22, 0) and _close(a32, 0) and _close(a13, -1) and _close(a31, 1):
        eig = _close(a11, -a33) and -1 < a11 < 1
        cone = eig and (1 - a11**2) ** 2 + 4 * (a21 * a11 + a23) * (a23 * a11 + a21) > 0
        params = {"a11": a11, "a21": a21, "a23": a23, "a33": a33}
        k = float(np.sqrt(1 - a11**2)) if eig else None
        return FamilyReport("Hyperbolic", _floats(params), bool(eig), bool(cone), k)
    return None


# ---------------------------------------------------------------- full report


@dataclass(frozen=True)
class ConditionReport:
    assumption_holds: bool
    assumption_verdict: str  # cone verdict, or "no_imaginary_pair"
    k: Optional[float]
    Gamma: Optional[np.ndarray]
    S1_holds: bool
    H0_holds: bool
    d0_verdict: Optional[D0Verdict]
    family: Optional[FamilyReport]
    eig_A: np.ndarray = field(repr=False, default=None)

    def to_json(self) -> dict:
        return {
            "assumption_holds": self.assumption_holds,
            "assumption_verdict": self.assumption_verdict,
            "k": self.k,
            "Gamma": None if self.Gamma is None else self.Gamma.tolist(),
            "S1_holds": self.S1_holds,
            "H0_holds": self.H0_holds,
            "d0": None if self.d0_verdict is None else self.d0_verdict.to_json(),
            "family": None if self.family is None else self.family.to_json(),
            "eig_A": [[z.real, z.imag] for z in self.eig_A],
        }


def classify(sys, h: Optional[HermitianCandidate] = None, samples: int = 1000,
             seed: int = 0) -> ConditionReport:
    sys = parse_system(sys)
    rep = to_matrix_vector(sys)
    es = eigen3(rep.A)
    if es.k is None:
        verdict, holds, k, G = "no_imaginary_pair", False, None, None
    else:
        res = cone_test(es.W_basis)
        verdict = res.verdict
        holds = verdict == "inside"
        k = es.k
        G = normalize_gamma(res.maximizer) if holds else None
    s1 = check_S1(rep)
    d0 = check_D0_candidate(sys, h, samples, seed) if h is not None else None
    return ConditionReport(holds, verdict, k, G, s1, check_H0(sys), d0,
                           classify_standard_family(rep.A), es.eig_A)
