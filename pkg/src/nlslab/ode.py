"""Limit ODE system ``i A_j' = F_j(A1, A2)`` and the explicit model profile.

The integrator is a Dormand-Prince 5(4) pair with FSAL, PI step-size control and
quartic dense output.  It works on complex arrays of any shape, so a whole
frequency grid can be advanced in lockstep.
"""

from __future__ import annotations

import warnings

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numba
import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import brentq

from .classification import check_assumption
from .elliptic import amplitude, complete_K, jacobi
from .errors import ModulusOutOfRange, NonFinite, StepFailure, ZeroState
from .invariants import QuarticInvariant, eval_quartic, quartic_from_gamma
from .system_repr import (
    CubicSystem,
    PairState,
    QuadVector,
    eval_nonlinearity,
    quad_vector,
    to_matrix_vector,
)

__all__ = [
    "dopri5",
    "dopri5_cubic",
    "OdeTrajectory",
    "integrate",
    "quad_residual",
    "ModelProfileParams",
    "model_params",
    "model_explicit",
    "quad_explicit",
    "periodicity_ratio",
]

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array(_A[6] + [0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# dense output: y(t + th h) = y + h sum_i K_i sum_j P[i, j] th^(j+1)
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


def dopri5(f: Callable, t0: float, y0, t1: float, t_eval, rtol: float, atol: float,
           h0: Optional[float] = None, max_steps: int = 10_000_000, h_min_rel: float = 1e-14):
    """Integrate ``y' = f(t, y)`` from ``t0`` to ``t1`` (either direction).

    The error norm is the maximum over all array entries, so every component
    meets ``atol + rtol |y|`` per step.  Returns the states at ``t_eval``
    (stacked on a leading axis) and the number of accepted steps.

    Raises
    ------
    StepFailure
        When the step size underflows; ``time`` holds the last accepted time.
    NonFinite
        When the state becomes non-finite.
    """
    y = np.array(y0, dtype=complex)
    t_eval = np.asarray(t_eval, dtype=float)
    out = np.empty((len(t_eval),) + y.shape, dtype=complex)
    direction = 1.0 if t1 >= t0 else -1.0
    if np.any(direction * np.diff(t_eval) < 0):
        raise ValueError("t_eval must be ordered in the direction of integration")
    span = abs(t1 - t0)
    idx = 0
    while idx < len(t_eval) and direction * (t_eval[idx] - t0) <= 0:
        out[idx] = y
        idx += 1
    if span == 0.0 or idx == len(t_eval):
        out[idx:] = y
        return out, 0

    K = np.empty((7,) + y.shape, dtype=complex)
    K[0] = f(t0, y)

    def err_norm(e, y_old, y_new):
        sc = atol + rtol * np.maximum(np.abs(y_old), np.abs(y_new))
        return float(np.max(np.abs(e) / sc)) if e.size else 0.0

    if h0 is None:
        # Hairer's starting-step heuristic
        d0 = err_norm(y, 0 * y, 0 * y)
        d1 = err_norm(K[0], 0 * y, 0 * y)
        h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        y1 = y + direction * h * K[0]
        d2 = err_norm(f(t0 + direction * h, y1) - K[0], 0 * y, 0 * y) / h
        dm = max(d1, d2)
        h1 = max(1e-6, h * 1e-3) if dm <= 1e-15 else (0.01 / dm) ** 0.2
        h = min(100 * h, h1, span)
    else:
        h = min(abs(h0), span)

    t = t0
    err_prev = 1e-4
    steps = 0
    alpha, beta, safety = 0.7 / 5, 0.4 / 5, 0.9
    while direction * (t1 - t) > 0:
        if steps >= max_steps:
            raise StepFailure(f"maximum number of steps reached at t={t:g}", time=t)
        h_min = h_min_rel * max(abs(t), span, 1.0)
        if h < h_min:
            raise StepFailure(f"step size underflow at t={t:g}", time=t)
        if h > abs(t1 - t):
            h = abs(t1 - t)
        hs = direction * h
        for i in range(1, 7):
            dy = sum(_A[i][j] * K[j] for j in range(i) if _A[i][j] != 0.0)
            K[i] = f(t + _C[i] * hs, y + hs * dy)
        y_new = y + hs * sum(_B[j] * K[j] for j in range(6) if _B[j] != 0.0)
        err = hs * np.tensordot(_E, K, axes=1)
        en = err_norm(err, y, y_new)
        if not np.isfinite(en):
            en = np.inf
        if en <= 1.0:
            t_new = t + hs
            if not np.all(np.isfinite(y_new)):
                raise NonFinite(f"non-finite state at t={t_new:g}", time=t_new)
            # K[6] = f(t_new, y_new) by construction (FSAL)
            while idx < len(t_eval) and direction * (t_eval[idx] - t_new) <= 0:
                th = (t_eval[idx] - t) / hs
                pw = th ** np.arange(1, 5)
                coef = _P @ pw
                out[idx] = y + hs * np.tensordot(coef, K, axes=1)
                idx += 1
            t, y = t_new, y_new
            K[0] = K[6]
            steps += 1
            fac = safety * en ** (-alpha) * err_prev**beta if en > 0 else 5.0
            h *= min(5.0, max(0.2, fac))
            err_prev = max(en, 1e-4)
        else:
            h *= max(0.2, safety * en ** (-alpha))
    while idx < len(t_eval):
        out[idx] = y
        idx += 1
    return out, steps


# ---------------------------------------------------------------- compiled single-state path

_A_MAT = np.zeros((7, 7))
for _i, _row in enumerate(_A):
    _A_MAT[_i, : len(_row)] = _row


@numba.njit(cache=True, inline="always")
def _cubic_f(l, a, b):
    r1 = a.real * a.real + a.imag * a.imag
    r2 = b.real * b.real + b.imag * b.imag
    m12 = a * a * b.conjugate()
    m21 = b * b * a.conjugate()
    f1 = (l[0] * r1 + l[3] * r2) * a + (l[1] * r1 + l[5] * r2) * b + l[2] * m12 + l[4] * m21
    f2 = (l[6] * r1 + l[9] * r2) * a + (l[7] * r1 + l[11] * r2) * b + l[8] * m12 + l[10] * m21
    return -1j * f1, -1j * f2


@numba.njit(cache=True)
def _dopri5_cubic(lam, y0, t1, t_eval, rtol, atol, max_steps, h_min_rel, Am, Bv, Cv, Ev, P):
    """Scalar-state version of :func:`dopri5` for ``i A' = F(A)``.

    Returns ``(out, steps, status, t)`` with status 0 ok, 1 underflow,
    2 non-finite, 3 too many steps.
    """
    n = t_eval.shape[0]
    out = np.empty((n, 2), dtype=np.complex128)
    K = np.empty((7, 2), dtype=np.complex128)
    y = y0.copy()
    idx = 0
    while idx < n and t_eval[idx] <= 0.0:
        out[idx] = y
        idx += 1
    if t1 == 0.0 or idx == n:
        for k in range(idx, n):
            out[k] = y
        return out, 0, 0, 0.0
    K[0, 0], K[0, 1] = _cubic_f(lam, y[0], y[1])
    # starting step (Hairer)
    d0 = max(abs(y[0]), abs(y[1])) / atol
    d1 = max(abs(K[0, 0]), abs(K[0, 1])) / atol
    h = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    g0, g1 = _cubic_f(lam, y[0] + h * K[0, 0], y[1] + h * K[0, 1])
    d2 = max(abs(g0 - K[0, 0]), abs(g1 - K[0, 1])) / atol / h
    dm = max(d1, d2)
    h1 = max(1e-6, h * 1e-3) if dm <= 1e-15 else (0.01 / dm) ** 0.2
    h = min(100 * h, h1, t1)
    t = 0.0
    err_prev = 1e-4
    steps = 0
    yt = np.empty(2, dtype=np.complex128)
    yn = np.empty(2, dtype=np.complex128)
    while t1 - t > 0:
        if steps >= max_steps:
            return out, steps, 3, t
        if h < h_min_rel * max(abs(t), t1, 1.0):
            return out, steps, 1, t
        if h > t1 - t:
            h = t1 - t
        for i in range(1, 7):
            for c in range(2):
                acc = 0j
                for j in range(i):
                    acc += Am[i, j] * K[j, c]
                yt[c] = y[c] + h * acc
            K[i, 0], K[i, 1] = _cubic_f(lam, yt[0], yt[1])
        en = 0.0
        for c in range(2):
            acc = 0j
            e = 0j
            for j in range(7):
                acc += Bv[j] * K[j, c]
                e += Ev[j] * K[j, c]
            yn[c] = y[c] + h * acc
            sc = atol + rtol * max(abs(y[c]), abs(yn[c]))
            en = max(en, abs(h * e) / sc)
        if not np.isfinite(en):
            en = np.inf
        if en <= 1.0:
            t_new = t + h
            if not (np.isfinite(yn[0].real) and np.isfinite(yn[0].imag)
                    and np.isfinite(yn[1].real) and np.isfinite(yn[1].imag)):
                return out, steps, 2, t_new
            while idx < n and t_eval[idx] <= t_new:
                th = (t_eval[idx] - t) / h
                for c in range(2):
                    acc = 0j
                    for i in range(7):
                        w = th * (P[i, 0] + th * (P[i, 1] + th * (P[i, 2] + th * P[i, 3])))
                        acc += w * K[i, c]
                    out[idx, c] = y[c] + h * acc
                idx += 1
            t = t_new
            y[0], y[1] = yn[0], yn[1]
            K[0, 0], K[0, 1] = K[6, 0], K[6, 1]
            steps += 1
            fac = 0.9 * en ** (-0.14) * err_prev ** 0.08 if en > 0 else 5.0
            h *= min(5.0, max(0.2, fac))
            err_prev = max(en, 1e-4)
        else:
            h *= max(0.2, 0.9 * en ** (-0.14))
    for k in range(idx, n):
        out[k] = y
    return out, steps, 0, t


def dopri5_cubic(lam, y0, t1: float, t_eval, rtol: float, atol: float,
                 max_steps: int = 10_000_000, h_min_rel: float = 1e-14):
    """Compiled forward DOPRI5 for one pair state of the cubic system with coefficients ``lam``.

    Same tableau, error norm and step control as :func:`dopri5`; ``t_eval``
    must be nondecreasing and start at or after 0.
    """
    t_eval = np.ascontiguousarray(t_eval, dtype=float)
    if t1 < 0 or np.any(np.diff(t_eval) < 0) or (len(t_eval) and t_eval[0] < 0):
        raise ValueError("dopri5_cubic integrates forward from 0 on an ordered grid")
    out, steps, status, t = _dopri5_cubic(
        np.ascontiguousarray(lam, dtype=float), np.array(y0, dtype=np.complex128), float(t1),
        t_eval, float(rtol), float(atol), int(max_steps), float(h_min_rel),
        _A_MAT, _B, _C, _E, _P)
    if status == 1:
        raise StepFailure(f"step size underflow at t={t:g}", time=t)
    if status == 2:
        raise NonFinite(f"non-finite state at t={t:g}", time=t)
    if status == 3:
        raise StepFailure(f"maximum number of steps reached at t={t:g}", time=t)
    return out, steps


@dataclass(frozen=True)
class OdeTrajectory:
    tau: np.ndarray
    A1: np.ndarray
    A2: np.ndarray
    quad: QuadVector
    quartic: Optional[np.ndarray]
    invariant: Optional[QuarticInvariant] = None
    steps: int = 0

    def states(self) -> list[PairState]:
        return [PairState(complex(a), complex(b)) for a, b in zip(self.A1, self.A2)]

    def table(self) -> np.ndarray:
        """Columns: tau, Re A1, Im A1, Re A2, Im A2, rho1, R, rho2, I, Q."""
        q = self.quartic if self.quartic is not None else np.full(len(self.tau), np.nan)
        return np.column_stack([self.tau, self.A1.real, self.A1.imag, self.A2.real, self.A2.imag,
                                self.quad.rho1, self.quad.R, self.quad.rho2, self.quad.I, q])


TABLE_HEADER = ["tau", "re_A1", "im_A1", "re_A2", "im_A2", "rho1", "R", "rho2", "I", "Q"]


def limit_rhs(sys: CubicSystem):
    """Right-hand side ``-i F`` for states stored with the pair on the last axis."""

    def f(t, y):
        F1, F2 = eval_nonlinearity(sys, (y[..., 0], y[..., 1]))
        return -1j * np.stack([F1, F2], axis=-1)

    return f


def integrate(sys: CubicSystem, s0, tau_end: float, tol: float = 1e-10, t_eval=None,
              n_out: int = 201) -> OdeTrajectory:
    """Solve ``i A' = F(A)`` from ``tau = 0`` to ``tau_end`` and record quadratic data.

    ``t_eval`` defaults to ``n_out`` uniform points.  The quartic invariant is
    tracked when the system admits one.
    """
    if not (1e-14 <= tol <= 1e-6):
        raise ValueError("tol must lie in [1e-14, 1e-6]")
    if t_eval is None:
        t_eval = np.linspace(0.0, tau_end, n_out)
    t_eval = np.asarray(t_eval, dtype=float)
    y0 = np.array([complex(s0[0]), complex(s0[1])])
    scale = max(float(np.max(np.abs(y0))), 1e-300)
    if tau_end >= 0 and np.all(np.diff(t_eval) >= 0) and (len(t_eval) == 0 or t_eval[0] >= 0):
        ys, steps = dopri5_cubic(sys.lam, y0, tau_end, t_eval, rtol=tol, atol=tol * scale)
    else:
        ys, steps = dopri5(limit_rhs(sys), 0.0, y0, tau_end, t_eval, rtol=tol, atol=tol * scale)
    A1, A2 = ys[:, 0], ys[:, 1]
    qv = quad_vector((A1, A2))
    rep = to_matrix_vector(sys)
    ok, wit = check_assumption(rep)
    inv = quartic_from_gamma(rep, *wit) if ok else None
    Q = eval_quartic(inv, (A1, A2)) if inv is not None else None
    return OdeTrajectory(t_eval, A1, A2, qv, Q, inv, steps)


# 8th-order centred first-derivative stencil
_D8 = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])


def quad_residual(sys: CubicSystem, traj: OdeTrajectory) -> float:
    """Max over interior grid points and ``e1, e2, e3`` of ``|d/dt(row e) - I row A e|``.

    Derivatives are 8th-order centred differences, so the grid must be uniform.
    """
    tau = traj.tau
    if len(tau) < 9:
        raise ValueError("need at least 9 grid points")
    dt = np.diff(tau)
    if np.max(np.abs(dt - dt[0])) > 1e-9 * abs(dt[0]):
        raise ValueError("trajectory grid must be uniform")
    q = traj.quad
    rows = np.column_stack([q.rho1, q.R, q.rho2])
    A = to_matrix_vector(sys).A
    rhs = q.I[:, None] * (rows @ A)
    n = len(tau)
    deriv = sum(_D8[j] * rows[j: n - 8 + j] for j in range(9)) / dt[0]
    return float(np.max(np.abs(deriv - rhs[4: n - 4])))


# ---------------------------------------------------------------- explicit model profile


@dataclass(frozen=True)
class ModelProfileParams:
    alpha: float
    R0: float
    m: float
    t0: float
    theta0: float
    beta: float
    branch: str  # "general" | "R0_zero"

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in ("alpha", "R0", "m", "t0", "theta0", "beta", "branch")}


def _solve_t0(x: float, y: float, m: float) -> float:
    """``u`` in ``[-2K, 2K]`` with ``(sn u, cn u)`` proportional to ``(x, y)``."""
    if x == 0.0 and y == 0.0:
        return 0.0
    phi = np.arctan2(x, y)
    K = complete_K(m)
    lo, hi = -2.0 * K, 2.0 * K
    if phi >= np.pi:
        return hi
    return brentq(lambda u: amplitude(u, m) - phi, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def model_params(psi1: complex, psi2: complex) -> ModelProfileParams:
    """Parameters of the explicit solution of the model system for data ``(psi1, psi2)``.

    ``t0`` is fixed by matching ``(sn, cn)(t0)`` to ``(sqrt2 (rho1 - rho2), I)/beta`` and
    ``theta0`` so that the profile reproduces ``(psi1, psi2)`` at ``tau = 0``.
    """
    psi1, psi2 = complex(psi1), complex(psi2)
    r1, r2 = abs(psi1) ** 2, abs(psi2) ** 2
    if r1 + r2 == 0.0:
        raise ZeroState("initial state is zero")
    alpha = 2.0 * np.sqrt(r1 * r1 + r2 * r2)
    z = np.conj(psi1) * psi2
    R0, I0 = 2.0 * z.real, 2.0 * z.imag
    m = float(min(max(0.5 - R0 * R0 / (alpha * alpha), 0.0), 0.5))
    beta = alpha * np.sqrt(m)
    if abs(R0) > 1e-12 * alpha:
        t0 = _solve_t0(np.sqrt(2.0) * (r1 - r2), I0, m) if beta > 0 else 0.0
        return ModelProfileParams(alpha, R0, m, t0, float(np.angle(psi1)), beta, "general")
    # R0 = 0: m = 1/2; the closed form is written in w = t0 + K(1/2) relative to the
    # (sn, cn) matching above
    m = 0.5
    beta = alpha * np.sqrt(m)
    t0 = _solve_t0(np.sqrt(2.0) * (r1 - r2), I0, m) + complete_K(0.5)
    a1, a2 = _r0_zero_shape(alpha, t0)
    if abs(psi1) >= abs(psi2):
        theta0 = float(np.angle(psi1 / a1))
    else:
        theta0 = float(np.angle(psi2 / a2))
    return ModelProfileParams(alpha, 0.0, m, t0, theta0, beta, "R0_zero")


def _r0_zero_shape(alpha: float, w):
    """Model profile at ``w = alpha tau + t0`` for ``R0 = 0``, without the phase ``theta0``."""
    half = jacobi(0.5 * np.asarray(w, dtype=float), 0.5)
    full = jacobi(w, 0.5)
    amp = 0.5 * np.sqrt(alpha) * np.sqrt(1.0 + full.nd)
    return half.sn * amp, 1j * half.cd * amp


def _phase_integrand(m: float):
    sm = np.sqrt(m)

    def g(v):
        e = jacobi(v, m)
        s = sm * e.sd
        return (1.0 - s) / (1.0 + s)

    return g


def _antiderivative(m: float, v0: float, v1: np.ndarray) -> np.ndarray:
    """``int_{v0}^{v1} g`` for each entry of ``v1``, using the ``4K`` periodicity of ``g``."""
    g = _phase_integrand(m)
    P = 4.0 * complete_K(m)
    x = np.concatenate([[v0], np.atleast_1d(np.asarray(v1, dtype=float))])
    n = np.floor(x / P)
    r = x - n * P
    # cumulative adaptive integrals between sorted residues; one period in total
    knots = np.unique(np.concatenate([[0.0], r, [P]]))
    with warnings.catch_warnings():
        # roundoff warnings only signal that 1e-15 absolute accuracy is at machine level
        warnings.simplefilter("ignore", IntegrationWarning)
        pieces = [quad(g, a, b, epsabs=1e-15, epsrel=1e-13, limit=200)[0]
                  for a, b in zip(knots[:-1], knots[1:])]
    cum = np.concatenate([[0.0], np.cumsum(pieces)])
    full = cum[-1]
    F = n * full + cum[np.searchsorted(knots, r)]
    return F[1:] - F[0]


def model_explicit(p: ModelProfileParams, tau) -> PairState:
    """Evaluate the closed-form model solution at ``tau`` (scalar or array)."""
    tau = np.asarray(tau, dtype=float)
    w = p.alpha * tau + p.t0
    ph0 = np.exp(1j * p.theta0)
    if p.branch == "R0_zero":
        a1, a2 = _r0_zero_shape(p.alpha, w)
        A1, A2 = ph0 * a1, ph0 * a2
    else:
        e = jacobi(w, p.m)
        sm = np.sqrt(p.m)
        base = np.sqrt(e.dn + sm * e.sn)
        if p.m == 0.0:
            integ = tau
        else:
            integ = np.reshape(_antiderivative(p.m, p.t0, np.ravel(w)), tau.shape) / p.alpha
        phase = ph0 * np.exp(-0.5j * p.R0 * integ)
        A1 = 2 ** -0.75 * np.sqrt(p.alpha) * base * phase
        A2 = 2 ** -0.25 / np.sqrt(p.alpha) * (p.R0 + 1j * p.alpha * sm * e.cn) / base * phase
    if tau.ndim == 0:
        return PairState(complex(A1), complex(A2))
    return PairState(A1, A2)


def quad_explicit(p: ModelProfileParams, tau):
    """Closed forms of ``(rho1, rho2, I)`` along the model solution."""
    tau = np.asarray(tau, dtype=float)
    t0 = p.t0 - complete_K(0.5) if p.branch == "R0_zero" else p.t0
    e = jacobi(p.alpha * tau + t0, p.m)
    sm = np.sqrt(p.m)
    c = 2 ** -1.5 * p.alpha
    return c * (e.dn + sm * e.sn), c * (e.dn - sm * e.sn), p.alpha * sm * e.cn


def periodicity_ratio(p_or_m, max_den: int = 64) -> dict:
    """``sqrt(1/2 - m) int_0^{4K} (1 - sqrt(m) sd)/(1 + sqrt(m) sd) / pi`` with rational approximants.

    The value decides nothing; it is reported with the closest fractions of
    bounded denominator for inspection.
    """
    m = p_or_m.m if isinstance(p_or_m, ModelProfileParams) else float(p_or_m)
    if not (0.0 < m < 0.5):
        raise ModulusOutOfRange("periodicity ratio needs 0 < m < 1/2")
    P = 4.0 * complete_K(m)
    val, _ = quad(_phase_integrand(m), 0.0, P, epsabs=1e-14, epsrel=1e-13, limit=400)
    ratio = float(np.sqrt(0.5 - m) * val / np.pi)
    approx = []
    for d in (8, 16, 32, max_den):
        fr = Fraction(ratio).limit_denominator(d)
        approx.append({"fraction": f"{fr.numerator}/{fr.denominator}",
                       "error": abs(ratio - fr.numerator / fr.denominator)})
    return {"m": m, "ratio": ratio, "approximants": approx}
