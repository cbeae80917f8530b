"""Jacobi elliptic functions of real argument, parameter convention ``m = k^2``.

Evaluated by the descending Landen (AGM) scheme after reducing the argument
modulo the real period ``4K(m)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ModulusOutOfRange

__all__ = ["EllipticEval", "jacobi", "amplitude", "complete_K"]

_MAX_AGM = 40


def _check_m(m) -> float:
    m = float(m)
    if not (0.0 <= m < 1.0) or not np.isfinite(m):
        raise ModulusOutOfRange(f"parameter m={m!r} outside [0, 1)")
    return m


@lru_cache(maxsize=256)
def _agm_sequence(m: float):
    """Return the AGM tables ``a_n`` and ``c_n`` started from ``(1, sqrt(1-m), sqrt(m))``.

    Cached per ``m``; the returned arrays are read-only.
    """
    a, b, c = 1.0, np.sqrt(1.0 - m), np.sqrt(m)
    aa, cc = [a], [c]
    for _ in range(_MAX_AGM):
        if abs(c) <= 1e-17 * a:
            break
        a, b, c = 0.5 * (a + b), np.sqrt(a * b), 0.5 * (a - b)
        aa.append(a)
        cc.append(c)
    aa, cc = np.array(aa), np.array(cc)
    aa.flags.writeable = False
    cc.flags.writeable = False
    return aa, cc


def complete_K(m) -> float:
    """Complete elliptic integral of the first kind.

    ``K(m) = int_0^{pi/2} (1 - m sin^2 t)^{-1/2} dt``, computed as ``pi / (2 AGM(1, sqrt(1-m)))``.
    """
    m = _check_m(m)
    aa, _ = _agm_sequence(m)
    return float(np.pi / (2.0 * aa[-1]))


def _reduce(u, m: float):
    """Split ``u = u_r + 4K n`` with ``u_r`` in ``[-2K, 2K)``."""
    K = complete_K(m)
    P = 4.0 * K
    n = np.floor((u + 2.0 * K) / P)
    return u - n * P, n, K


def amplitude(u, m):
    """Jacobi amplitude ``am(u, m)``; continuous and increasing in ``u``."""
    m = _check_m(m)
    u = np.asarray(u, dtype=float)
    ur, n, _ = _reduce(u, m)
    phi = _landen_phi(ur, m)[0]
    out = phi + 2.0 * np.pi * n
    return out if out.ndim else float(out)


def _landen_phi(u, m: float):
    aa, cc = _agm_sequence(m)
    N = len(aa) - 1
    if np.ndim(u) == 0:
        # scalar fast path (quadrature integrands)
        phi = (2.0**N) * float(aa[-1]) * float(u)
        phis = [phi]
        for j in range(N, 0, -1):
            phi = 0.5 * (phi + math.asin(min(1.0, max(-1.0, cc[j] / aa[j] * math.sin(phi)))))
            phis.append(phi)
        return phi, phis
    phi = (2.0**N) * aa[-1] * u
    phis = [phi]
    for j in range(N, 0, -1):
        phi = 0.5 * (phi + np.arcsin(np.clip(cc[j] / aa[j] * np.sin(phi), -1.0, 1.0)))
        phis.append(phi)
    return phi, phis


@dataclass(frozen=True)
class EllipticEval:
    """Values of ``sn, cn, dn`` at ``(u, m)`` with the usual quotients."""

    sn: np.ndarray
    cn: np.ndarray
    dn: np.ndarray
    m: float

    @property
    def cd(self):
        return self.cn / self.dn

    @property
    def sd(self):
        return self.sn / self.dn

    @property
    def nd(self):
        return 1.0 / self.dn

    def as_tuple(self):
        return self.sn, self.cn, self.dn


def jacobi(u, m) -> EllipticEval:
    """Evaluate ``sn, cn, dn`` at real ``u`` (scalar or array) and parameter ``m`` in [0, 1).

    Examples
    --------
    >>> e = jacobi(0.0, 0.3)
    >>> float(e.sn), float(e.cn), float(e.dn)
    (0.0, 1.0, 1.0)
    """
    m = _check_m(m)
    u = np.asarray(u, dtype=float)
    if m == 0.0:
        return EllipticEval(np.sin(u), np.cos(u), np.ones_like(u), m)
    ur, _, _ = _reduce(u, m)
    phi, _ = _landen_phi(ur, m)
    sn = np.sin(phi)
    cn = np.cos(phi)
    # dn > 0 on the real line for m < 1
    dn = np.sqrt(np.maximum(1.0 - m * sn * sn, 0.0))
    return EllipticEval(sn, cn, dn, m)
