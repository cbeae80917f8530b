"""Split-step spectral solver for the two-component cubic NLS on a periodic box.

Solves ``(i d_t + d_x^2) u_j = F_j(u1, u2)`` on ``[-L/2, L/2)`` and evaluates
the profile ``w_j = F U(-t) u_j`` together with the quantities used to track
long-time behaviour: ``J``-norms, the remainder ``r_j`` of the profile
equation ``i d_t w = F(w) / 2t + r`` and pointwise drift of the quartic
invariant.

Transforms use the unitary convention ``f^(xi) = (2 pi)^(-1/2) int e^{-i x xi} f dx``,
approximated on the grid by a phase-corrected FFT.  With this convention

    U(-1/4t) w = F[e^{i x^2/4t} F^{-1} w],
    r = (U(1/4t) F(U(-1/4t) w) - F(w)) / 2t,
    ||U(-1/4t) w||_inf = (2t)^{1/2} ||u||_inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numba
import numpy as np
import scipy.fft as sfft

from .classification import check_assumption
from .errors import NonFinite, WrongSystem
from .invariants import QuarticInvariant, eval_quartic, quartic_from_gamma
from .ode import dopri5, limit_rhs
from .system_repr import MODEL_SYSTEM, CubicSystem, eval_nonlinearity, to_matrix_vector

__all__ = [
    "Grid",
    "FieldState",
    "ProfileState",
    "DiagnosticRow",
    "GaussianDatum",
    "Schedule",
    "RunResult",
    "initial_state",
    "step",
    "linear_step",
    "profile",
    "field_from_profile",
    "j_norm",
    "j_norm_direct",
    "free_evolution",
    "remainders",
    "sup_identity",
    "diagnostics",
    "run",
    "quartic_drift",
    "asymptotic_match",
    "extract_scattering_state",
    "model_conserved_checks",
    "wrap_fraction",
    "fit_exponent",
]


# ---------------------------------------------------------------- grid


@dataclass(frozen=True)
class Grid:
    """Periodic grid ``x_k = -L/2 + k L/N`` with frequencies in FFT order."""

    L: float = 400.0 * np.pi
    N: int = 2**14

    def __post_init__(self):
        if not (self.L > 0 and np.isfinite(self.L)):
            raise ValueError("box length L must be positive")
        if self.N < 2 or self.N & (self.N - 1):
            raise ValueError("N must be a power of two")

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def dxi(self) -> float:
        return 2.0 * np.pi / self.L

    @property
    def x(self) -> np.ndarray:
        return -0.5 * self.L + self.dx * np.arange(self.N)

    @property
    def xi(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.N, d=self.dx)

    @property
    def _alt(self) -> np.ndarray:
        # e^{i xi_n L/2} = (-1)^n
        return 1.0 - 2.0 * (np.arange(self.N) % 2)

    def ft(self, f: np.ndarray) -> np.ndarray:
        """Samples of the continuous Fourier transform on the ``xi`` grid."""
        return (self.dx / np.sqrt(2 * np.pi)) * self._alt * sfft.fft(f, axis=-1)

    def ift(self, g: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`ft` (samples of the inverse transform on the ``x`` grid)."""
        return (self.N * self.dxi / np.sqrt(2 * np.pi)) * sfft.ifft(self._alt * g, axis=-1)

    def l2(self, f, d: float) -> np.ndarray:
        return np.sqrt(np.sum(np.abs(f) ** 2, axis=-1) * d)

    def to_json(self) -> dict:
        return {"L": float(self.L), "N": int(self.N)}


@dataclass(frozen=True)
class FieldState:
    u1: np.ndarray
    u2: np.ndarray
    t: float
    grid: Grid

    def __post_init__(self):
        if not (np.all(np.isfinite(self.u1)) and np.all(np.isfinite(self.u2))):
            raise NonFinite(f"non-finite field at t={self.t:g}", time=self.t)

    def stack(self) -> np.ndarray:
        return np.stack([self.u1, self.u2])


@dataclass(frozen=True)
class ProfileState:
    """Profiles ``w_j(xi)`` on the frequency grid (FFT order)."""

    w1: np.ndarray
    w2: np.ndarray
    t: float
    grid: Grid

    def stack(self) -> np.ndarray:
        return np.stack([self.w1, self.w2])


# ---------------------------------------------------------------- data


@dataclass(frozen=True)
class GaussianDatum:
    """``u_j(0, x) = eps c_j e^{-x^2}`` with ``(c1, c2)`` normalized to unit length."""

    eps: float = 0.05
    c1: complex = 0.8
    c2: complex = 0.6

    def coefficients(self) -> tuple[complex, complex]:
        n = math.hypot(abs(self.c1), abs(self.c2))
        if n == 0:
            raise ValueError("c1 and c2 cannot both vanish")
        return complex(self.c1) / n, complex(self.c2) / n


@dataclass(frozen=True)
class Schedule:
    dt: float = 1e-3
    snapshots: tuple = (1.0, 10.0, 100.0, 200.0)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        s = np.asarray(self.snapshots, dtype=float)
        if s.size == 0 or np.any(s < 0) or np.any(np.diff(s) <= 0):
            raise ValueError("snapshot times must be non-negative and increasing")

    def step_counts(self) -> np.ndarray:
        n = np.rint(np.asarray(self.snapshots, dtype=float) / self.dt).astype(np.int64)
        if np.any(np.abs(n * self.dt - np.asarray(self.snapshots)) > 1e-9 * np.maximum(1.0, self.snapshots)):
            raise ValueError("snapshot times must be integer multiples of dt")
        return n


def initial_state(datum: GaussianDatum, grid: Grid) -> FieldState:
    c1, c2 = datum.coefficients()
    g = datum.eps * np.exp(-grid.x**2)
    return FieldState(c1 * g, c2 * g, 0.0, grid)


# ---------------------------------------------------------------- stepping


# no-NaN/no-inf flags are left out so blow-up still propagates to the finiteness check
_FM = {"contract", "reassoc", "arcp", "nsz"}


@numba.njit(cache=True, fastmath=_FM, inline="always")
def _F(lam, a, b):
    aa = a.real * a.real + a.imag * a.imag
    bb = b.real * b.real + b.imag * b.imag
    a2cb = a * a * b.conjugate()
    b2ca = b * b * a.conjugate()
    f1 = (lam[0] * aa + lam[3] * bb) * a + (lam[1] * aa + lam[5] * bb) * b + lam[2] * a2cb + lam[4] * b2ca
    f2 = (lam[6] * aa + lam[9] * bb) * a + (lam[7] * aa + lam[11] * bb) * b + lam[8] * a2cb + lam[10] * b2ca
    return f1, f2


@numba.njit(cache=True, fastmath=_FM)
def _rk4_pointwise(lam, u1, u2, h):
    """One classical RK4 step of ``i A' = F(A)`` at every grid point, in place."""
    mi = -1j * h
    for k in range(u1.shape[0]):
        a, b = u1[k], u2[k]
        k1a, k1b = _F(lam, a, b)
        k2a, k2b = _F(lam, a + 0.5 * mi * k1a, b + 0.5 * mi * k1b)
        k3a, k3b = _F(lam, a + 0.5 * mi * k2a, b + 0.5 * mi * k2b)
        k4a, k4b = _F(lam, a + mi * k3a, b + mi * k3b)
        u1[k] = a + mi * (k1a + 2 * k2a + 2 * k3a + k4a) * (1.0 / 6.0)
        u2[k] = b + mi * (k1b + 2 * k2b + 2 * k3b + k4b) * (1.0 / 6.0)


def linear_step(state: FieldState, dt: float) -> FieldState:
    """Exact free evolution ``U(dt)`` (spectral multiplier ``e^{-i xi^2 dt}``)."""
    g = state.grid
    mult = np.exp(-1j * g.xi**2 * dt)
    v = sfft.ifft(mult * sfft.fft(state.stack(), axis=-1), axis=-1)
    return FieldState(v[0], v[1], state.t + dt, g)


def free_evolution(state: FieldState, t: float) -> FieldState:
    return linear_step(state, t - state.t)


def _lam(sys: CubicSystem) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(sys.lam, dtype=float))


def step(sys: CubicSystem, state: FieldState, dt: float) -> FieldState:
    """One Strang step: half linear, RK4 nonlinear substep, half linear.

    Raises
    ------
    NonFinite
        If the field leaves the finite range.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    g = state.grid
    half = np.exp(-0.5j * g.xi**2 * dt)
    v = sfft.ifft(half * sfft.fft(state.stack(), axis=-1), axis=-1)
    u1, u2 = np.ascontiguousarray(v[0]), np.ascontiguousarray(v[1])
    _rk4_pointwise(_lam(sys), u1, u2, dt)
    v = sfft.ifft(half * sfft.fft(np.stack([u1, u2]), axis=-1), axis=-1)
    return FieldState(v[0], v[1], state.t + dt, g)


def _advance(lam, uh, n: int, dt: float, full, half, t0: float) -> np.ndarray:
    """Advance spectral data ``uh`` (stacked, unnormalized FFT) by ``n`` Strang steps.

    Consecutive half linear steps are merged into full ones.
    """
    if n == 0:
        return uh
    uh = half * uh
    for i in range(n):
        v = sfft.ifft(uh, axis=-1)
        u1, u2 = np.ascontiguousarray(v[0]), np.ascontiguousarray(v[1])
        _rk4_pointwise(lam, u1, u2, dt)
        if not (np.isfinite(u1).all() and np.isfinite(u2).all()):
            raise NonFinite(f"non-finite field at t={t0 + (i + 1) * dt:g}", time=t0 + (i + 1) * dt)
        uh = sfft.fft(np.stack([u1, u2]), axis=-1)
        uh = (full if i < n - 1 else half) * uh
    return uh


# ---------------------------------------------------------------- profiles and norms


def profile(state: FieldState) -> ProfileState:
    """``w_j = e^{i xi^2 t} u^_j`` (exact spectral form of ``F U(-t) u_j``)."""
    g = state.grid
    ph = np.exp(1j * g.xi**2 * state.t)
    w = ph * g.ft(state.stack())
    return ProfileState(w[0], w[1], state.t, g)


def field_from_profile(p: ProfileState) -> FieldState:
    g = p.grid
    u = g.ift(np.exp(-1j * g.xi**2 * p.t) * p.stack())
    return FieldState(u[0], u[1], p.t, g)


def _dxi(g: Grid, w: np.ndarray) -> np.ndarray:
    """Spectral derivative along the periodic ``xi`` grid; Nyquist mode dropped."""
    y = 2.0 * np.pi * np.fft.fftfreq(g.N, d=g.dxi)
    y[g.N // 2] = 0.0
    return np.fft.ifft(1j * y * np.fft.fft(w, axis=-1), axis=-1)


def j_norm(state: FieldState) -> tuple[float, float]:
    """``||J(t) u_j||_{L^2}`` computed as ``||d_xi w_j||_{L^2}``."""
    p = profile(state)
    g = state.grid
    d = g.l2(_dxi(g, p.stack()), g.dxi)
    return float(d[0]), float(d[1])


def j_norm_direct(state: FieldState) -> tuple[float, float]:
    """``||(x + 2it d_x) u_j||_{L^2}`` evaluated on the ``x`` grid."""
    g = state.grid
    xi = g.xi
    xi[g.N // 2] = 0.0
    ux = sfft.ifft(1j * xi * sfft.fft(state.stack(), axis=-1), axis=-1)
    Ju = g.x * state.stack() + 2j * state.t * ux
    d = g.l2(Ju, g.dx)
    return float(d[0]), float(d[1])


def _chirp_op(g: Grid, w: np.ndarray, t: float, sign: int) -> np.ndarray:
    """``U(-sign/4t) w`` on the ``xi`` grid."""
    return g.ft(np.exp(sign * 1j * g.x**2 / (4.0 * t)) * g.ift(w))


def _F_arrays(sys: CubicSystem, w: np.ndarray) -> np.ndarray:
    return np.stack(eval_nonlinearity(sys, (w[0], w[1])))


def remainders(sys: CubicSystem, state) -> tuple[np.ndarray, np.ndarray]:
    """Remainders ``r_j(xi)`` of the profile equation ``i d_t w_j = F_j(w) / 2t + r_j``.

    Accepts a :class:`FieldState` or :class:`ProfileState`; needs ``t > 0``.
    """
    p = state if isinstance(state, ProfileState) else profile(state)
    t = p.t
    if not t > 0:
        raise ValueError("remainders need t > 0")
    g = p.grid
    w = p.stack()
    v = _chirp_op(g, w, t, +1)
    r = (_chirp_op(g, _F_arrays(sys, v), t, -1) - _F_arrays(sys, w)) / (2.0 * t)
    return r[0], r[1]


def sup_identity(state: FieldState) -> dict:
    """Both sides of ``||U(-1/4t) w_j||_inf = (2t)^{1/2} ||u_j||_inf``."""
    p = profile(state)
    v = _chirp_op(p.grid, p.stack(), p.t, +1)
    lhs = np.abs(v).max(axis=-1)
    rhs = np.sqrt(2.0 * p.t) * np.abs(state.stack()).max(axis=-1)
    return {"lhs": lhs.tolist(), "rhs": rhs.tolist(),
            "rel_err": float(np.max(np.abs(lhs - rhs) / np.maximum(rhs, 1e-300)))}


def wrap_fraction(p: ProfileState) -> float:
    """Fraction of ``L^2`` mass at frequencies whose group position ``2 t xi`` lies outside the box."""
    g = p.grid
    out = np.abs(2.0 * p.t * g.xi) > 0.5 * g.L
    m = np.sum(np.abs(p.stack()) ** 2, axis=0)
    tot = m.sum()
    return float(m[out].sum() / tot) if tot > 0 else 0.0


# ---------------------------------------------------------------- quartic drift


def _quartic_for(sys: CubicSystem) -> Optional[QuarticInvariant]:
    rep = to_matrix_vector(sys)
    ok, wit = check_assumption(rep)
    return quartic_from_gamma(rep, *wit) if ok else None


def quartic_drift(invariant: QuarticInvariant, p0: ProfileState, p1: ProfileState,
                  mask_rel: float = 1e-3) -> float:
    """``sup_xi |Q(w(t))^{1/4} - Q(w(t0))^{1/4}|`` over frequencies with ``|w(t0)| >= mask_rel max|w(t0)|``."""
    if p0.grid != p1.grid:
        raise ValueError("profiles live on different grids")
    amp = np.sqrt(np.abs(p0.w1) ** 2 + np.abs(p0.w2) ** 2)
    keep = amp >= mask_rel * amp.max() if amp.max() > 0 else np.zeros_like(amp, dtype=bool)
    if not keep.any():
        return 0.0
    q0 = np.maximum(eval_quartic(invariant, (p0.w1[keep], p0.w2[keep])), 0.0) ** 0.25
    q1 = np.maximum(eval_quartic(invariant, (p1.w1[keep], p1.w2[keep])), 0.0) ** 0.25
    return float(np.max(np.abs(q1 - q0)))


# ---------------------------------------------------------------- diagnostics and runs


@dataclass(frozen=True)
class DiagnosticRow:
    t: float
    l2: tuple
    linf: tuple
    jnorm: tuple
    X: float
    Y: float
    r_linf: tuple
    r_l2: tuple
    quartic_drift: float
    wrap: float

    FIELDS = ("t", "l2_1", "l2_2", "linf_1", "linf_2", "J_1", "J_2", "X", "Y",
              "r_linf_1", "r_linf_2", "r_l2_1", "r_l2_2", "quartic_drift", "wrap")

    def values(self) -> list[float]:
        return [self.t, *self.l2, *self.linf, *self.jnorm, self.X, self.Y,
                *self.r_linf, *self.r_l2, self.quartic_drift, self.wrap]

    def to_dict(self) -> dict:
        return dict(zip(self.FIELDS, map(float, self.values())))


def diagnostics(sys: CubicSystem, states: Sequence[FieldState], eps: float, delta: float = 0.1,
                ref: Optional[ProfileState] = None) -> list[DiagnosticRow]:
    """Diagnostic rows for a time-ordered list of states.

    ``X`` and ``Y`` are running suprema over the listed times.  Remainder norms
    are NaN at ``t = 0``; quartic drift is measured against ``ref`` (default: the
    first state) and is NaN for systems without a coercive quartic invariant.
    """
    inv = _quartic_for(sys)
    rows, X, Y = [], 0.0, 0.0
    p_ref = ref
    for s in states:
        g = s.grid
        p = profile(s)
        if p_ref is None:
            p_ref = p
        l2 = g.l2(s.stack(), g.dx)
        linf = np.abs(s.stack()).max(axis=-1)
        jn = np.array(j_norm(s))
        X = max(X, (1.0 + s.t) ** (-delta * eps * eps) * float(np.sum(l2 + jn)))
        if s.t > 0:
            Y = max(Y, np.sqrt(s.t) * float(linf.sum()))
            r = np.stack(remainders(sys, p))
            r_inf = tuple(np.abs(r).max(axis=-1).tolist())
            r_l2 = tuple(g.l2(r, g.dxi).tolist())
        else:
            r_inf = r_l2 = (np.nan, np.nan)
        qd = quartic_drift(inv, p_ref, p) if inv is not None else np.nan
        rows.append(DiagnosticRow(float(s.t), tuple(l2.tolist()), tuple(linf.tolist()), tuple(jn.tolist()),
                                  X, Y, r_inf, r_l2, qd, wrap_fraction(p)))
    return rows


@dataclass
class RunResult:
    sys: CubicSystem
    grid: Grid
    datum: GaussianDatum
    schedule: Schedule
    states: list = field(default_factory=list)
    rows: list = field(default_factory=list)

    def state_at(self, t: float) -> FieldState:
        for s in self.states:
            if abs(s.t - t) <= 1e-9 * max(1.0, t):
                return s
        raise KeyError(f"no snapshot at t={t:g}")

    def table(self) -> np.ndarray:
        return np.array([r.values() for r in self.rows], dtype=float)


def run(sys: CubicSystem, datum: GaussianDatum = GaussianDatum(), schedule: Schedule = Schedule(),
        grid: Grid = Grid(), delta: float = 0.1, progress=None) -> RunResult:
    """Evolve Gaussian data and record snapshots and diagnostics.

    The initial state is always stored; ``schedule.snapshots`` lists the other
    recording times (multiples of ``dt``).  ``progress`` is an optional callable
    receiving each snapshot time.

    Raises
    ------
    NonFinite
        If the field blows up; ``time`` is the failing time.
    """
    counts = schedule.step_counts()
    s0 = initial_state(datum, grid)
    states = [s0]
    lam = _lam(sys)
    xi = grid.xi
    dt = schedule.dt
    full = np.exp(-1j * xi**2 * dt)
    half = np.exp(-0.5j * xi**2 * dt)
    uh = sfft.fft(s0.stack(), axis=-1)
    done = 0
    for n, ts in zip(counts, schedule.snapshots):
        uh = _advance(lam, uh, int(n - done), dt, full, half, done * dt)
        done = int(n)
        if ts == 0.0 and n == 0:
            continue
        v = sfft.ifft(uh, axis=-1)
        states.append(FieldState(v[0], v[1], float(n * dt), grid))
        if progress is not None:
            progress(float(n * dt))
    rows = diagnostics(sys, states, datum.eps, delta)
    return RunResult(sys, grid, datum, schedule, states, rows)


# ---------------------------------------------------------------- asymptotics


def _ode_flow(sys: CubicSystem, w: np.ndarray, dtau: float, tol: float) -> np.ndarray:
    """Pointwise flow of ``i dA/dtau = F(A)`` applied to stacked profiles (2, n)."""
    y0 = np.ascontiguousarray(w.T)
    scale = max(float(np.abs(y0).max()), 1e-300)
    ys, _ = dopri5(limit_rhs(sys), 0.0, y0, dtau, [dtau], rtol=tol, atol=tol * scale)
    return ys[-1].T


def asymptotic_match(sys: CubicSystem, p1: ProfileState, p2: ProfileState, tol: float = 1e-11) -> dict:
    """Distance between ``w(t2)`` and the limit-ODE flow of ``w(t1)`` over ``dtau = log(t2/t1)/2``."""
    if not (1.0 <= p1.t < p2.t):
        raise ValueError("need 1 <= t1 < t2")
    g = p1.grid
    dtau = 0.5 * np.log(p2.t / p1.t)
    pred = _ode_flow(sys, p1.stack(), dtau, tol)
    diff = pred - p2.stack()
    return {"t1": p1.t, "t2": p2.t, "dtau": float(dtau),
            "l2": float(np.sqrt(np.sum(g.l2(diff, g.dxi) ** 2))),
            "linf": float(np.abs(diff).max()),
            "predicted": pred}


def extract_scattering_state(sys: CubicSystem, p: ProfileState, tol: float = 1e-11,
                             p_check: Optional[ProfileState] = None) -> dict:
    """Pull ``w(T)`` back along the limit ODE from ``tau = log(T)/2`` to ``tau = 0``.

    If ``p_check`` (a later profile, e.g. at ``2T``) is given its extraction is
    also computed and the sup difference reported as ``stability``.
    """
    if p.t < 10.0:
        raise ValueError("extraction needs T >= 10")
    psi = _ode_flow(sys, p.stack(), -0.5 * np.log(p.t), tol)
    out = {"T": p.t, "psi1": psi[0], "psi2": psi[1]}
    if p_check is not None:
        psi_c = _ode_flow(sys, p_check.stack(), -0.5 * np.log(p_check.t), tol)
        out["T_check"] = p_check.t
        out["stability"] = float(np.abs(psi_c - psi).max())
    return out


def model_conserved_checks(states: Sequence[FieldState], sys: CubicSystem = MODEL_SYSTEM) -> dict:
    """Drift of ``int Re(conj(u1) u2)`` and of the model energy along a state series.

    Raises
    ------
    WrongSystem
        If ``sys`` is not the model system.
    """
    if sys != MODEL_SYSTEM:
        raise WrongSystem("conserved integrals are specific to the model system")
    P, E = [], []
    for s in states:
        g = s.grid
        xi = g.xi
        xi[g.N // 2] = 0.0
        ux = sfft.ifft(1j * xi * sfft.fft(s.stack(), axis=-1), axis=-1)
        P.append(float(np.sum((s.u1.conj() * s.u2).real) * g.dx))
        kin = np.sum((ux[0].conj() * ux[1]).real) * g.dx
        pot = 0.25 * np.sum(np.abs(s.u1) ** 4 + np.abs(s.u2) ** 4) * g.dx
        E.append(float(kin + pot))
    P, E = np.array(P), np.array(E)

    def rel(a):
        ref = abs(a[0])
        return float(np.max(np.abs(a - a[0])) / ref) if ref > 0 else float(np.max(np.abs(a - a[0])))

    return {"times": [s.t for s in states], "inner": P.tolist(), "energy": E.tolist(),
            "inner_drift": rel(P), "energy_drift": rel(E)}


def fit_exponent(t, y) -> float:
    """Least-squares slope of ``log y`` against ``log t``."""
    t, y = np.asarray(t, dtype=float), np.asarray(y, dtype=float)
    keep = (t > 0) & (y > 0) & np.isfinite(y)
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(t[keep]), np.log(y[keep]), 1)[0])
