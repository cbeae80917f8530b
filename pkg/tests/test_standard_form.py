import numpy as np
import pytest

from nlslab import standard_form as sf
from nlslab.errors import AssumptionFails
from nlslab.system_repr import MODEL_SYSTEM, MatrixVectorRep, apply_change, to_matrix_vector


def test_model_parameters():
    sys, rep = sf.build_standard(sf.StandardFormParams())
    assert sys == MODEL_SYSTEM


def test_spectrum_and_eigenvector(rng):
    for _ in range(200):
        p = sf.sample_params(rng)
        A = sf.standard_matrix(p)
        poly = np.poly(A)
        assert np.allclose(poly, [1, -p.lambda0, 1, -p.lambda0], atol=1e-10)
        v = np.array([p.eta2, 1.0, p.eta3])
        assert np.linalg.norm(A @ v - p.lambda0 * v) < 1e-10


def test_reduce_model():
    cert = sf.reduce(to_matrix_vector(MODEL_SYSTEM))
    assert sf.params_distance(cert.params, sf.StandardFormParams()) < 1e-12
    assert cert.residual < 1e-12
    assert np.allclose(np.abs(cert.M), np.eye(2), atol=1e-12)


def test_reduce_round_trip(rng):
    for _ in range(300):
        p = sf.sample_params(rng)
        M = sf.sample_change(rng)
        _, rep = sf.build_standard(p)
        cert = sf.reduce(apply_change(rep, M))
        assert sf.params_distance(cert.params, p) <= 1e-7
        assert cert.residual <= 1e-9


def test_reduce_composite_transports(rng):
    p = sf.sample_params(rng)
    _, rep = sf.build_standard(p)
    rep2 = apply_change(rep, sf.sample_change(rng))
    cert = sf.reduce(rep2)
    M = np.eye(2)
    for _, S in cert.steps:
        M = S @ M
    assert np.allclose(M, cert.M)
    _, built = sf.build_standard(cert.params)
    assert np.allclose(apply_change(rep2, cert.M).A, built.A, atol=1e-9)


def test_reduce_rejects():
    with pytest.raises(AssumptionFails):
        sf.reduce(MatrixVectorRep(np.zeros((3, 3)), np.zeros(3)))


def test_standard_quartic_examples(rng):
    Q = sf.standard_quartic(sf.StandardFormParams())
    s = rng.normal(size=(2, 10)) + 1j * rng.normal(size=(2, 10))
    assert np.allclose(Q(s), np.abs(s[0]) ** 4 + np.abs(s[1]) ** 4)
    for _ in range(10):
        assert sf.standard_quartic(sf.sample_params(rng))((1, 0)) == pytest.approx(1.0)
    assert sf.standard_quartic(sf.StandardFormParams(1, 1.0))((1, 1)) == pytest.approx(3.5231883119115293)


def test_energy_like():
    e = sf.energy_like_condition(sf.StandardFormParams())
    assert e is not None and e.q == 0
    assert sf.energy_like_condition(sf.StandardFormParams(lambda0=1.0)) is None
    p = sf.StandardFormParams(1, 0.2, 1.0, 3.0, 0.0, 2.0, 2.0, 6.0)
    assert sf.energy_like_condition(p).q == pytest.approx(2.0)
    u1, u2 = 0.3 + 0.2j, -0.5 + 0.1j
    assert e.density(u1, u2) == pytest.approx(abs(u1) ** 4 + abs(u2) ** 4)


def test_equivalent_params_describe_same_class(rng):
    for _ in range(30):
        p = sf.sample_params(rng)
        orbit = sf.equivalent_params(p)
        assert len(orbit) == 4
        for e in orbit:
            _, rep = sf.build_standard(e)
            cert = sf.reduce(apply_change(rep, sf.sample_change(rng)))
            assert sf.params_distance(cert.params, p) <= 1e-7


def test_params_validation():
    with pytest.raises(ValueError):
        sf.StandardFormParams(sigma=0)
    with pytest.raises(ValueError):
        sf.StandardFormParams(eta1=np.inf)
