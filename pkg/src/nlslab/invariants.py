"""Quartic conserved quantity of the limit ODE system.

With ``Gamma`` in ``W(-k^2, A^2)`` and ``GammaTilde = A Gamma / k``,

    Q = (row . Gamma)^2 + (row . GammaTilde)^2,   row = (rho1, R, rho2),

and the two inner products rotate into each other at rate ``k I`` along the flow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classification import cone_test, eigen3, normalize_gamma
from .errors import AssumptionFails, PreconditionViolated
from .system_repr import MatrixVectorRep, PairState, apply_change, quad_vector

__all__ = [
    "QuarticInvariant",
    "build_quartic",
    "quartic_from_gamma",
    "quartic_rows",
    "eval_quartic",
    "coercivity_bounds",
    "nontrivial_zero",
]

_SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class QuarticInvariant:
    k: float
    Gamma: np.ndarray
    GammaTilde: np.ndarray

    def to_json(self) -> dict:
        return {"k": self.k, "Gamma": self.Gamma.tolist(), "GammaTilde": self.GammaTilde.tolist()}


def quartic_from_gamma(rep: MatrixVectorRep, k: float, Gamma) -> QuarticInvariant:
    """Invariant for an explicitly chosen ``Gamma`` (any nonzero vector of the eigenspace)."""
    G = np.asarray(Gamma, dtype=float)
    return QuarticInvariant(float(k), G, rep.A @ G / k)


def build_quartic(rep: MatrixVectorRep) -> QuarticInvariant:
    """Pick ``Gamma`` in ``W(-k^2, A^2)`` inside the open cone ``ac > b^2``.

    ``Gamma`` maximizes ``ac - b^2`` on the unit sphere of the eigenspace and is
    then scaled so that ``g1 g3 - g2^2 = 1`` with ``g1 > 0``.

    Raises
    ------
    AssumptionFails
        If ``A`` has no pure-imaginary pair or its eigenspace misses the cone.
    """
    es = eigen3(rep.A)
    if es.k is None:
        raise AssumptionFails("A has no pure-imaginary eigenvalue pair")
    res = cone_test(es.W_basis)
    if res.verdict != "inside":
        raise AssumptionFails(f"eigenspace does not meet the open cone ({res.verdict})")
    return quartic_from_gamma(rep, es.k, normalize_gamma(res.maximizer))


def quartic_rows(q: QuarticInvariant, s):
    """Return ``(row . Gamma, row . GammaTilde)``."""
    qv = quad_vector(s)
    g, gt = q.Gamma, q.GammaTilde
    return (g[0] * qv.rho1 + g[1] * qv.R + g[2] * qv.rho2,
            gt[0] * qv.rho1 + gt[1] * qv.R + gt[2] * qv.rho2)


def eval_quartic(q: QuarticInvariant, s):
    a, b = quartic_rows(q, s)
    out = a * a + b * b
    return out if np.ndim(out) else float(out)


def _golden_min(f, a, b, tol=1e-12, maxit=200):
    g = 0.5 * (np.sqrt(5.0) - 1.0)
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(maxit):
        if abs(b - a) < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def coercivity_bounds(q: QuarticInvariant, n_scan: int = 2001) -> tuple[float, float]:
    """Minimum and maximum of ``Q`` on ``|A1|^2 + |A2|^2 = 1``.

    There ``rho2 = 1 - rho1`` and ``(rho1, R)`` fills the disk ``R^2 <= 4 rho1 rho2``.
    With ``u = (rho1 - 1/2, R/2)`` the disk is ``|u| <= 1/2`` and ``Q = |c + N u|^2``
    is a convex quadratic, so the maximum sits on the circle and the minimum is
    either the interior least-squares point or a boundary point.
    """
    L = np.vstack([q.Gamma, q.GammaTilde])
    c = L @ np.array([0.5, 0.0, 0.5])
    N = L @ np.array([[1.0, 0.0], [0.0, 2.0], [-1.0, 0.0]])

    def Q(u):
        r = c + N @ u
        return float(r @ r)

    def on_circle(th):
        return Q(0.5 * np.array([np.cos(th), np.sin(th)]))

    th = np.linspace(0.0, 2.0 * np.pi, n_scan)
    vals = np.array([on_circle(t) for t in th])
    step = th[1] - th[0]

    def refine(i, sign):
        x, fx = _golden_min(lambda t: sign * on_circle(t), th[i] - step, th[i] + step)
        return sign * fx

    hi = max(vals.max(), refine(int(np.argmax(vals)), -1.0))
    lo_b = min(vals.min(), refine(int(np.argmin(vals)), 1.0))

    # min-norm least-squares point is the closest minimizer to the disk centre
    u_star, *_ = np.linalg.lstsq(N, -c, rcond=None)
    lo = Q(u_star) if np.linalg.norm(u_star) <= 0.5 else lo_b
    return float(max(min(lo, lo_b), 0.0)), float(hi)


def nontrivial_zero(rep: MatrixVectorRep, k: float) -> PairState:
    """Nonzero state with ``Q = 0`` when ``W(-k^2, A^2)`` misses the open cone.

    Follows the two explicit changes of variables: when the eigenspace touches
    ``ac = b^2`` the zero is the image of ``(0, 1)``; otherwise ``Gamma`` is moved
    to ``(0, 1, 0)`` and the zero is the image of ``(|gt3|^(1/2), i |gt1|^(1/2))``.

    Raises
    ------
    PreconditionViolated
        If ``-k^2`` is not an eigenvalue of ``A^2`` or the eigenspace meets the cone.
    """
    es = eigen3(rep.A)
    if es.k is None or abs(es.k - k) > 1e-8 * (1.0 + k):
        raise PreconditionViolated(f"-k^2 = {-k * k:g} is not an eigenvalue of A^2")
    res = cone_test(es.W_basis)
    if res.verdict == "inside":
        raise PreconditionViolated("eigenspace meets the open cone; Q is coercive")
    G = np.array(res.maximizer, dtype=float)
    Mtot = np.eye(2)
    work = rep
    scale = np.abs(G).max()

    if res.verdict == "boundary":
        if G[0] + G[2] < 0:
            G = -G
        if abs(G[0]) <= 1e-12 * scale:
            Mtot = _SWAP @ Mtot
            G = G[::-1].copy()
        g1, g2, g3 = G
        sg = 1.0 if g2 >= 0 else -1.0
        r1 = np.sqrt(g1)
        M1 = np.array([[r1, sg * np.sqrt(max(g3, 0.0))], [0.0, 1.0 / r1]])
        Mtot = M1 @ Mtot
        B = np.array([0.0, 1.0], dtype=complex)
    else:
        if abs(G[0]) <= 1e-12 * scale and abs(G[2]) <= 1e-12 * scale:
            M = np.eye(2)
        else:
            if abs(G[0]) <= 1e-12 * scale:
                Mtot = _SWAP @ Mtot
                work = apply_change(work, _SWAP)
                G = G[::-1].copy()
            if G[0] < 0:
                G = -G
            g1, g2, g3 = G
            s = np.sqrt(g2 * g2 - g1 * g3)
            sg = 1.0 if g2 >= 0 else -1.0
            M = np.array([[g1, g2 - sg * s], [g1, g2 + sg * s]])
        Mtot = M @ Mtot
        work = apply_change(work, M)
        gt = work.A @ np.array([0.0, 1.0, 0.0])
        B = np.array([np.sqrt(abs(gt[2])), 1j * np.sqrt(abs(gt[0]))])
    A = np.linalg.solve(Mtot, B)
    return PairState(complex(A[0]), complex(A[1]))
