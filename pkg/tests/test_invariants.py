import numpy as np
import pytest
from scipy.integrate import solve_ivp

from nlslab import invariants as inv
from nlslab import standard_form as sf
from nlslab.classification import check_assumption, cone_test, eigen3
from nlslab.errors import AssumptionFails, PreconditionViolated
from nlslab.system_repr import MODEL_SYSTEM, MatrixVectorRep, from_matrix_vector, to_matrix_vector

from conftest import oracle_F

MODEL_REP = to_matrix_vector(MODEL_SYSTEM)


def rep_with_plane(w1, w2, e, lam0=0.3):
    """A with W(-1, A^2) = span(w1, w2) and third eigenvector e."""
    S = np.column_stack([w1, w2, e])
    blk = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, lam0]])
    return MatrixVectorRep(S @ blk @ np.linalg.inv(S), np.zeros(3))


def test_model_quartic():
    q = inv.build_quartic(MODEL_REP)
    assert np.allclose(q.Gamma, [1, 0, 1]) and np.allclose(q.GammaTilde, [-1, 0, 1])
    assert inv.eval_quartic(q, (0, 0)) == 0
    assert inv.eval_quartic(q, (1, 0)) == pytest.approx(2.0)
    assert inv.eval_quartic(q, (1, 1)) == pytest.approx(4.0)


def test_model_quartic_is_twice_fourth_powers(rng):
    q = inv.build_quartic(MODEL_REP)
    s = rng.normal(size=(2, 50)) + 1j * rng.normal(size=(2, 50))
    assert np.allclose(inv.eval_quartic(q, s), 2 * (np.abs(s[0]) ** 4 + np.abs(s[1]) ** 4))


def test_standard_quartic_proportional(rng):
    for _ in range(50):
        p = sf.sample_params(rng)
        _, rep = sf.build_standard(p)
        q = inv.build_quartic(rep)
        s = rng.normal(size=(2, 30)) + 1j * rng.normal(size=(2, 30))
        ratio = inv.eval_quartic(q, s) / sf.standard_quartic(p)(s)
        assert np.std(ratio) <= 1e-9 * np.mean(ratio)


def test_assumption_failure_raises():
    with pytest.raises(AssumptionFails):
        inv.build_quartic(MatrixVectorRep(np.zeros((3, 3)), np.zeros(3)))


def test_coercivity_model():
    lo, hi = inv.coercivity_bounds(inv.build_quartic(MODEL_REP))
    assert lo == pytest.approx(1.0, abs=1e-9) and hi == pytest.approx(2.0, abs=1e-9)


def test_coercivity_bounds_sampled(rng):
    for _ in range(30):
        _, rep = sf.build_standard(sf.sample_params(rng))
        q = inv.build_quartic(rep)
        lo, hi = inv.coercivity_bounds(q)
        assert lo > 0
        s = rng.normal(size=(2, 4000)) + 1j * rng.normal(size=(2, 4000))
        s /= np.sqrt(np.sum(np.abs(s) ** 2, axis=0))
        v = inv.eval_quartic(q, s)
        assert v.min() >= lo * (1 - 1e-9) and v.max() <= hi * (1 + 1e-9)
        # the bounds are (nearly) attained
        assert v.min() <= lo * 1.05 and v.max() >= hi * 0.95
        # homogeneity
        assert np.allclose(inv.eval_quartic(q, 2.0 * s[:, :5]), 16 * v[:5])


def test_quartic_conserved_against_scipy(rng):
    # independent integrator (scipy DOP853) on the monomial oracle
    for _ in range(10):
        _, rep = sf.build_standard(sf.sample_params(rng))
        rep = MatrixVectorRep(rep.A, rep.V)
        sys = from_matrix_vector(rep)
        q = inv.build_quartic(rep)
        y0 = rng.normal(size=2) + 1j * rng.normal(size=2)
        y0 *= 0.7 / np.linalg.norm(y0)

        def f(t, y):
            a, b = y[0] + 1j * y[1], y[2] + 1j * y[3]
            F1, F2 = oracle_F(sys.lam, a, b)
            d1, d2 = -1j * F1, -1j * F2
            return [d1.real, d1.imag, d2.real, d2.imag]

        sol = solve_ivp(f, (0, 20), [y0[0].real, y0[0].imag, y0[1].real, y0[1].imag],
                        method="DOP853", rtol=1e-12, atol=1e-13, t_eval=np.linspace(0, 20, 51))
        A1, A2 = sol.y[0] + 1j * sol.y[1], sol.y[2] + 1j * sol.y[3]
        Q = inv.eval_quartic(q, (A1, A2))
        assert np.max(np.abs(Q - Q[0])) / Q[0] < 1e-8


def test_gamma_choice_independence(rng):
    _, rep = sf.build_standard(sf.sample_params(rng))
    es = eigen3(rep.A)
    q = inv.build_quartic(rep)
    s = rng.normal(size=(2, 40)) + 1j * rng.normal(size=(2, 40))
    for th in (0.3, 0.9):
        G = np.cos(th) * q.Gamma + np.sin(th) * q.GammaTilde
        q2 = inv.quartic_from_gamma(rep, es.k, G)
        r = inv.eval_quartic(q2, s) / inv.eval_quartic(q, s)
        assert np.std(r) < 1e-10 * np.mean(r)


def test_nontrivial_zero_outside(rng):
    # plane with normal (1, 0, 1) misses the cone: v2^2 - 4 v1 v3 = -4
    rep = rep_with_plane([1.0, 0.0, -1.0], [0.0, 1.0, 0.0], [1.0, 0.2, 1.0])
    assert cone_test(eigen3(rep.A).W_basis).verdict == "outside"
    z = inv.nontrivial_zero(rep, 1.0)
    assert abs(z.A1) + abs(z.A2) > 0.1
    es = eigen3(rep.A)
    for G in es.W_basis:
        q = inv.quartic_from_gamma(rep, 1.0, G)
        assert inv.eval_quartic(q, z) <= 1e-10 * (abs(z.A1) ** 2 + abs(z.A2) ** 2) ** 2


def test_nontrivial_zero_boundary():
    # plane {a = 0} touches the cone boundary along (0, 0, 1)
    rep = rep_with_plane([0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.3, 0.2])
    assert cone_test(eigen3(rep.A).W_basis).verdict == "boundary"
    z = inv.nontrivial_zero(rep, 1.0)
    q = inv.quartic_from_gamma(rep, 1.0, [0.0, 0.0, 1.0])
    assert abs(z.A1) + abs(z.A2) > 0.1
    assert inv.eval_quartic(q, z) <= 1e-10 * (abs(z.A1) ** 2 + abs(z.A2) ** 2) ** 2


def test_nontrivial_zero_gamma_b_axis():
    # Gamma = (0, 1, 0) direction admissible in the eigenspace
    rep = rep_with_plane([0.0, 1.0, 0.0], [1.0, 0.0, -1.0], [1.0, 0.1, 1.0])
    z = inv.nontrivial_zero(rep, 1.0)
    q = inv.quartic_from_gamma(rep, 1.0, [0.0, 1.0, 0.0])
    assert inv.eval_quartic(q, z) <= 1e-10 * (abs(z.A1) ** 2 + abs(z.A2) ** 2) ** 2


def test_nontrivial_zero_preconditions():
    with pytest.raises(PreconditionViolated):
        inv.nontrivial_zero(MODEL_REP, 1.0)
    with pytest.raises(PreconditionViolated):
        inv.nontrivial_zero(MODEL_REP, 2.0)


def test_check_assumption_matches_quartic(rng):
    for _ in range(50):
        _, rep = sf.build_standard(sf.sample_params(rng))
        ok, (k, G) = check_assumption(rep)
        q = inv.build_quartic(rep)
        assert np.allclose(q.Gamma, G) and q.k == k
