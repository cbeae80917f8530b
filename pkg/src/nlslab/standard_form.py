"""Standard forms of systems whose eigenplane ``W(-k^2, A^2)`` meets the open cone.

Every such system is carried by a real change of variables to

    A = [[sh, -e2 sh + s e3 ch + e2 l0, -s ch],
         [0,  l0,                        0],
         [s ch, -s e2 ch + e3 sh + e3 l0, -sh]],   V = (q1, q2, q3),

with ``sh = sinh(eta1)``, ``ch = cosh(eta1)``, ``s = sigma``, ``l0 = lambda0``.
The parameters are unique only up to the group generated by swapping the
components and flipping the sign of the second one (see :func:`equivalent_params`).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .classification import eigen3, cone_test
from .errors import AssumptionFails, DegenerateEigenvector
from .system_repr import CubicSystem, MatrixVectorRep, apply_change, from_matrix_vector

__all__ = [
    "StandardFormParams",
    "ReductionCertificate",
    "EnergyLike",
    "build_standard",
    "standard_matrix",
    "reduce",
    "standard_quartic",
    "energy_like_condition",
    "equivalent_params",
    "params_distance",
    "sample_params",
    "sample_change",
]


@dataclass(frozen=True)
class StandardFormParams:
    sigma: int = 1
    eta1: float = 0.0
    eta2: float = 0.0
    eta3: float = 0.0
    lambda0: float = 0.0
    q1: float = 0.0
    q2: float = 0.0
    q3: float = 0.0

    def __post_init__(self):
        if self.sigma not in (1, -1):
            raise ValueError("sigma must be +1 or -1")
        vals = [self.eta1, self.eta2, self.eta3, self.lambda0, self.q1, self.q2, self.q3]
        if not np.all(np.isfinite(vals)):
            raise ValueError("standard-form parameters must be finite")

    def vector(self) -> np.ndarray:
        return np.array([self.sigma, self.eta1, self.eta2, self.eta3, self.lambda0,
                         self.q1, self.q2, self.q3], dtype=float)

    def to_json(self) -> dict:
        return {k: (int(v) if k == "sigma" else float(v)) for k, v in asdict(self).items()}


def standard_matrix(p: StandardFormParams) -> np.ndarray:
    sh, ch = np.sinh(p.eta1), np.cosh(p.eta1)
    s, e2, e3, l0 = p.sigma, p.eta2, p.eta3, p.lambda0
    return np.array([
        [sh, -e2 * sh + s * e3 * ch + e2 * l0, -s * ch],
        [0.0, l0, 0.0],
        [s * ch, -s * e2 * ch + e3 * sh + e3 * l0, -sh],
    ])


def build_standard(p: StandardFormParams) -> tuple[CubicSystem, MatrixVectorRep]:
    rep = MatrixVectorRep(standard_matrix(p), np.array([p.q1, p.q2, p.q3]))
    return from_matrix_vector(rep), rep


@dataclass(frozen=True)
class ReductionCertificate:
    steps: list  # [(name, 2x2 matrix)] in order of application
    M: np.ndarray  # composite change, v = M u
    params: StandardFormParams
    residual: float  # max entrywise |apply_change(rep, M) - build_standard(params)|
    beta: float = 0.0
    swapped: bool = False
    extras: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "steps": [{"name": n, "M": np.asarray(m).tolist()} for n, m in self.steps],
            "composite": self.M.tolist(),
            "params": self.params.to_json(),
            "residual": self.residual,
            "beta": self.beta,
            "swapped": self.swapped,
            **self.extras,
        }


_SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])


def _shear_root(v: np.ndarray, tol: float = 1e-12):
    """Real root ``b`` of ``v1 + v2 b + v3 b^2 = 0`` of least modulus; ``None`` when none exists.

    The shear ``[[1, b], [0, 1]]`` amplifies rounding by roughly ``b^2``, so the
    smaller root is the better conditioned choice.
    """
    v1, v2, v3 = v
    if abs(v3) <= tol * np.abs(v).max():
        if abs(v2) <= tol * np.abs(v).max():
            return None
        return -v1 / v2
    disc = v2 * v2 - 4 * v1 * v3
    if disc < 0:
        return None
    sq = np.sqrt(disc)
    # cancellation-free pair of roots
    qq = -0.5 * (v2 + np.copysign(sq, v2))
    roots = [qq / v3, v1 / qq] if qq != 0 else [0.0, 0.0]
    return float(min(roots, key=lambda x: (abs(x), x)))


def reduce(rep: MatrixVectorRep) -> ReductionCertificate:
    """Carry ``rep`` to standard form by scaling, shear and a triangular change.

    Raises
    ------
    AssumptionFails
        If the eigenplane of ``-k^2`` does not meet the open cone.
    DegenerateEigenvector
        If the ``lambda0``-eigenvector has (numerically) vanishing middle entry.
    """
    es = eigen3(rep.A)
    if es.k is None or cone_test(es.W_basis).verdict != "inside":
        raise AssumptionFails("system does not admit a standard form")
    k = es.k
    steps = []
    Mtot = np.eye(2)

    def push(name, M, cur):
        nonlocal Mtot
        steps.append((name, np.asarray(M, dtype=float)))
        Mtot = M @ Mtot
        return apply_change(cur, M)

    cur = push("scale", np.sqrt(k) * np.eye(2), rep)

    es1 = eigen3(cur.A)
    beta = _shear_root(es1.normal)
    swapped = False
    if beta is None:
        cur = push("swap", _SWAP, cur)
        swapped = True
        beta = _shear_root(eigen3(cur.A).normal)
        if beta is None:
            raise AssumptionFails("no real shear parameter after swap")
    cur = push("shear", np.array([[1.0, beta], [0.0, 1.0]]), cur)

    g = cur.A @ np.array([1.0, 0.0, 0.0])
    if abs(g[2]) <= 1e-14 * max(1.0, np.abs(g).max()):
        raise AssumptionFails("degenerate eigenplane after shear")
    sigma = 1 if g[2] > 0 else -1
    eta1 = float(np.arcsinh(g[0] - g[1] ** 2 / g[2]))
    r = (np.cosh(eta1) / abs(g[2])) ** 0.25
    cur = push("triangular", np.array([[r, 0.0], [g[1] / (g[2] * r), 1.0 / r]]), cur)

    A3 = cur.A
    lam0 = float(A3[1, 1])
    # lambda0-eigenvector; its middle entry must not vanish
    _, sv, Vt = np.linalg.svd(A3 - lam0 * np.eye(3))
    ev = Vt[-1]
    if abs(ev[1]) < 1e-10:
        raise DegenerateEigenvector("lambda0-eigenvector has vanishing middle entry")
    Mlin = np.array([[A3[0, 0] - lam0, A3[0, 2]], [A3[2, 0], A3[2, 2] - lam0]])
    eta2, eta3 = np.linalg.solve(Mlin, -np.array([A3[0, 1], A3[2, 1]]))
    q = cur.V
    params = StandardFormParams(sigma, eta1, float(eta2), float(eta3), lam0,
                                float(q[0]), float(q[1]), float(q[2]))
    _, built = build_standard(params)
    res_rep = apply_change(rep, Mtot)
    residual = float(max(np.abs(res_rep.A - built.A).max(), np.abs(res_rep.V - built.V).max()))
    eig_res = float(np.linalg.norm((A3 - lam0 * np.eye(3)) @ np.array([eta2, 1.0, eta3])))
    return ReductionCertificate(steps, Mtot, params, residual, float(beta), swapped,
                                {"k": k, "eigvec_residual": eig_res})


def standard_quartic(p: StandardFormParams):
    """Closed-form quartic ``|A1|^4 + 2 sigma tanh(eta1) |A1|^2 |A2|^2 + |A2|^4``."""
    c = 2.0 * p.sigma * np.tanh(p.eta1)

    def Q(s):
        r1 = np.abs(np.asarray(s[0])) ** 2
        r2 = np.abs(np.asarray(s[1])) ** 2
        return r1 * r1 + c * r1 * r2 + r2 * r2

    return Q


@dataclass(frozen=True)
class EnergyLike:
    q: float
    params: StandardFormParams

    def density(self, u1, u2):
        """Quartic integrand of the energy-like conserved quantity."""
        p = self.params
        sh, ch = np.sinh(p.eta1), np.cosh(p.eta1)
        e2, e3, s, q = p.eta2, p.eta3, p.sigma, self.q
        u1 = np.asarray(u1, dtype=complex)
        u2 = np.asarray(u2, dtype=complex)
        r1, r2 = np.abs(u1) ** 2, np.abs(u2) ** 2
        re12 = (u1.conj() * u2).real
        re_sq = (u1.conj() ** 2 * u2**2).real
        t = sh + q
        off = s * (1 - e2 * e3) * ch
        return ((e2 * e2 * t + off) * r1 * r1 + 4 * e2 * t * r1 * re12
                + 2 * (2 * sh + e2 * e3 + q) * r1 * r2 + 2 * t * re_sq
                + 4 * e3 * t * r2 * re12 + (e3 * e3 * t + off) * r2 * r2)


def energy_like_condition(p: StandardFormParams, tol: float = 1e-10):
    """Return :class:`EnergyLike` when ``lambda0 = 0`` and ``V = q (eta2, 1, eta3)``; else ``None``."""
    if abs(p.lambda0) > tol:
        return None
    q = p.q2
    scale = 1.0 + abs(q)
    if abs(p.q1 - q * p.eta2) > tol * scale or abs(p.q3 - q * p.eta3) > tol * scale:
        return None
    return EnergyLike(float(q), p)


# ---------------------------------------------------------------- non-uniqueness


def equivalent_params(p: StandardFormParams) -> list[StandardFormParams]:
    """The four parameter sets describing the same system class.

    Swapping ``u1 <-> u2`` and flipping ``u2 -> -u2`` both map standard forms to
    standard forms; together with the identity and their product they act as
    a Klein four-group on the parameters.
    """
    def swap(x):
        return StandardFormParams(x.sigma, x.eta1, x.eta3, x.eta2, -x.lambda0, x.q3, x.q2, x.q1)

    def flip(x):
        return StandardFormParams(-x.sigma, -x.eta1, -x.eta2, -x.eta3, -x.lambda0, x.q1, -x.q2, x.q3)

    return [p, swap(p), flip(p), swap(flip(p))]


def params_distance(p: StandardFormParams, ref: StandardFormParams) -> float:
    """Smallest max-abs difference between ``p`` and the orbit of ``ref``; inf if sigma never matches."""
    best = np.inf
    for e in equivalent_params(ref):
        if e.sigma != p.sigma:
            continue
        best = min(best, float(np.abs(e.vector() - p.vector()).max()))
    return best


def sample_params(rng: np.random.Generator, scale: float = 1.0) -> StandardFormParams:
    return StandardFormParams(
        int(rng.choice([-1, 1])), *(scale * rng.uniform(-1.5, 1.5, size=4)),
        *(scale * rng.uniform(-1.0, 1.0, size=3)),
    )


def sample_change(rng: np.random.Generator, max_cond: float = 20.0) -> np.ndarray:
    """Random real 2x2 matrix with condition number at most ``max_cond``."""
    while True:
        M = rng.normal(size=(2, 2))
        if np.linalg.cond(M) <= max_cond:
            return M
