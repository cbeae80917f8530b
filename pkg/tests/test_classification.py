import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlslab import classification as cl
from nlslab import standard_form as sf
from nlslab.errors import DegenerateBasis, NotPositive
from nlslab.system_repr import MODEL_SYSTEM, CubicSystem, MatrixVectorRep, from_matrix_vector, to_matrix_vector

from conftest import oracle_F

MODEL_REP = to_matrix_vector(MODEL_SYSTEM)


def elliptic_template(p1, p2, p3, p4, p5):
    return np.array([
        [p1 + p5, -2 * p2 - 2 * p3 - 2 * p4, -p1 - p5],
        [p2 - p3, 2 * p1, -p2 + p3],
        [-p1 + p5, 2 * p2 + 2 * p3 - 2 * p4, p1 - p5],
    ])


def test_eigen3_model():
    es = cl.eigen3(MODEL_REP.A)
    assert np.allclose(np.sort_complex(es.eig_A), np.sort_complex([1j, -1j, 0]), atol=1e-14)
    assert np.allclose(np.sort(es.eig_A2.real), [-1, -1, 0], atol=1e-14)
    assert es.k == pytest.approx(1.0, abs=1e-14)
    # W(-1, A^2) = span{e1, e3}: the normal is +-e2
    assert np.allclose(np.abs(es.normal), [0, 1, 0], atol=1e-14)
    assert es.residuals(MODEL_REP.A).max() < 1e-14


def test_eigen3_zero():
    assert cl.eigen3(np.zeros((3, 3))).k is None


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=9, max_size=9))
def test_eigen3_matches_numpy(entries):
    A = np.reshape(entries, (3, 3))
    ours = np.sort_complex(cl.eigen3(A).eig_A)
    ref = np.sort_complex(np.linalg.eigvals(A))
    # eigenvalues of nearly defective matrices are only determined to sqrt(eps)
    assert np.allclose(ours, ref, atol=1e-6 * (1 + np.abs(A).max()))


def test_standard_form_spectrum(rng):
    for _ in range(100):
        p = sf.sample_params(rng)
        es = cl.eigen3(sf.standard_matrix(p))
        coeffs = np.poly(es.eig_A).real
        # (x^2 + 1)(x - l0) = x^3 - l0 x^2 + x - l0
        assert np.allclose(coeffs, [1, -p.lambda0, 1, -p.lambda0], atol=1e-9)


def test_cone_test_examples():
    assert cl.subspace_meets_Pplus([[1, 0, 0], [0, 0, 1]])
    assert not cl.subspace_meets_Pplus([[0, 1, 0]])
    r = cl.cone_test([[1, 0, 0]])
    assert r.verdict == "boundary" and not cl.subspace_meets_Pplus([[1, 0, 0]])
    with pytest.raises(DegenerateBasis):
        cl.cone_test([[1, 0, 0], [2, 0, 0]])
    with pytest.raises(DegenerateBasis):
        cl.cone_test([[0, 0, 0]])


def test_normal_criterion_agrees_with_cone_test(rng):
    # a plane v^perp meets the open cone iff v2^2 - 4 v1 v3 > 0
    for _ in range(500):
        v = rng.normal(size=3)
        _, _, Vt = np.linalg.svd(v[None, :])
        basis = Vt[1:]
        crit = cl.normal_criterion(v)
        if abs(crit) < 1e-6:
            continue
        assert (crit > 0) == cl.subspace_meets_Pplus(basis)


def test_check_assumption_examples(rng):
    ok, (k, G) = cl.check_assumption(MODEL_REP)
    assert ok and k == pytest.approx(1.0)
    assert np.allclose(G, [1, 0, 1], atol=1e-12)
    assert cl.check_assumption(MatrixVectorRep(np.zeros((3, 3)), np.zeros(3))) == (False, None)
    for _ in range(100):
        _, rep = sf.build_standard(sf.sample_params(rng))
        ok, (k, G) = cl.check_assumption(rep)
        assert ok and k == pytest.approx(1.0, abs=1e-9)
        assert G[0] * G[2] - G[1] ** 2 == pytest.approx(1.0)


def test_s1_examples(rng):
    assert not cl.check_S1(MODEL_REP)
    assert cl.check_S1(MatrixVectorRep(np.zeros((3, 3)), rng.normal(size=3)))
    A = rng.normal(size=(3, 3))
    assert np.linalg.matrix_rank(A) == 3 and not cl.check_S1(MatrixVectorRep(A, np.zeros(3)))


def test_h0_gives_conserved_hermitian_mass(rng):
    # a kernel vector h in the cone makes a|A1|^2 + 2b Re(conj A1 A2) + c|A2|^2 conserved
    n_true = 0
    for _ in range(200):
        h = np.array([1.0, rng.uniform(-0.5, 0.5), 1.0])
        B = rng.normal(size=(3, 3))
        A = B - np.outer(B @ h, h) / (h @ h)  # A h = 0
        sys = from_matrix_vector(MatrixVectorRep(A, rng.normal(size=3)))
        assert cl.check_H0(sys)
        n_true += 1
        a, b = rng.normal(size=2) + 1j * rng.normal(size=2)
        F1, F2 = oracle_F(sys.lam, a, b)
        S = np.array([[h[0], h[1]], [h[1], h[2]]])
        val = (np.conj([a, b]) @ S @ np.array([F1, F2])).imag
        assert abs(val) < 1e-10 * (1 + np.abs(sys.lam).max()) * (abs(a) ** 2 + abs(b) ** 2) ** 2
    assert n_true == 200
    assert not cl.check_H0(MODEL_SYSTEM)


def test_d0_model_refuted_on_imaginary_axis():
    for q1 in (0.0, 0.3):
        h = cl.HermitianCandidate(1.0, q1, 0.0, 2.0)
        v = cl.check_D0_candidate(MODEL_SYSTEM, h)
        assert v.refuted
        w = v.witness
        assert w.A1 == 1 and w.A2.real == 0 and abs(w.A2.imag) in (0.1, 10.0)
        assert cl.d0_quantity(MODEL_SYSTEM, h, w) > 0


def test_d0_model_with_q2():
    h = cl.HermitianCandidate(1.0, 0.0, 0.2, 1.0)
    v = cl.check_D0_candidate(MODEL_SYSTEM, h)
    assert v.refuted
    # on the axes the quantity is -+2 q2 rho^2 up to sign: one of (1,0), (0,1) is positive
    vals = [cl.d0_quantity(MODEL_SYSTEM, h, s) for s in ((1, 0), (0, 1))]
    assert max(vals) > 0 and np.isclose(abs(vals[0]), 0.2) and np.isclose(abs(vals[1]), 0.2)


def test_d0_zero_system_undecided():
    v = cl.check_D0_candidate(CubicSystem(np.zeros(12)), cl.HermitianCandidate(1, 0, 0, 1))
    assert v.kind == "UndecidedAfterSearch" and v.n_tested > 1000


def test_d0_rejects_non_positive():
    with pytest.raises(NotPositive):
        cl.check_D0_candidate(MODEL_SYSTEM, cl.HermitianCandidate(1, 2, 0, 1))


def test_family_parabolic():
    a12, a13 = 0.0, 1.0
    A = np.array([[0, a12, a13], [0, 0, 1.0], [0, -1.0, 0]])
    fr = cl.classify_standard_family(A)
    assert fr.family == "Parabolic" and fr.k == 1.0 and fr.holds
    assert fr.params["sigma1"] == -1 and fr.params["sigma2"] == 1
    ok, wit = cl.check_assumption(A)
    assert ok and wit[0] == pytest.approx(1.0)


def test_family_elliptic_p1_nonzero_fails():
    A = elliptic_template(1.0, 2.0, 0.5, 0.3, 0.2)
    fr = cl.classify_standard_family(A)
    assert fr.family == "Elliptic" and not fr.eigen_condition
    assert np.isclose(fr.params["p1"], 1.0)


def test_family_elliptic_agrees_with_direct(rng):
    for _ in range(200):
        p = rng.normal(size=5)
        p[0] = 0.0
        A = elliptic_template(*p)
        fr = cl.classify_standard_family(A)
        assert fr.family == "Elliptic"
        assert np.allclose([fr.params[f"p{i + 1}"] for i in range(5)], p)
        ok, _ = cl.check_assumption(A)
        es = cl.eigen3(A)
        assert fr.eigen_condition == (es.k is not None)
        if es.k is not None:
            assert fr.k == pytest.approx(es.k, rel=1e-9)
            margin = (p[4] / (p[1] - p[2])) ** 2 + (p[3] / (p[1] + p[2])) ** 2 - 1
            if abs(margin) > 1e-6:
                assert fr.holds == ok


def test_family_hyperbolic():
    A = np.array([[0.0, 0, -1], [0, 0, 0], [1, 0, 0]])
    fr = cl.classify_standard_family(A)
    assert fr.family == "Hyperbolic" and fr.holds and fr.k == pytest.approx(1.0)


def test_family_hyperbolic_agrees_with_direct(rng):
    for _ in range(200):
        a11, a21, a23 = rng.uniform(-0.95, 0.95), rng.normal(), rng.normal()
        A = np.array([[a11, 0, -1], [a21, 0, a23], [1, 0, -a11]])
        fr = cl.classify_standard_family(A)
        ok, wit = cl.check_assumption(A)
        cond = (1 - a11**2) ** 2 + 4 * (a21 * a11 + a23) * (a23 * a11 + a21)
        if abs(cond) > 1e-6:
            assert fr.holds == ok == (cond > 0)
        if ok:
            assert wit[0] == pytest.approx(np.sqrt(1 - a11**2))


def test_classify_report():
    r = cl.classify(MODEL_SYSTEM, h=cl.HermitianCandidate(1, 0, 0, 1))
    assert r.assumption_holds and not r.S1_holds and not r.H0_holds
    assert r.d0_verdict.refuted
    j = r.to_json()
    assert j["assumption_verdict"] == "inside" and j["k"] == pytest.approx(1.0)
    z = cl.classify(CubicSystem(np.zeros(12)))
    assert not z.assumption_holds and z.S1_holds
