import numpy as np
import pytest

from nlslab import pde
from nlslab.errors import NonFinite, WrongSystem
from nlslab.invariants import build_quartic
from nlslab.system_repr import MODEL_SYSTEM, CubicSystem, to_matrix_vector

ZERO = CubicSystem(np.zeros(12))
# same spacing as the default grid; Gaussian data stay away from the edges up to t ~ 10
SMALL = pde.Grid(100 * np.pi, 2**12)


def exact_free_gaussian(x, t):
    """Solution of i u_t + u_xx = 0 with u(0) = e^{-x^2}."""
    s = 1 + 4j * t
    return np.exp(-x**2 / s) / np.sqrt(s)


def test_fourier_transform_of_gaussian():
    g = SMALL
    f = np.exp(-g.x**2)
    ref = np.exp(-g.xi**2 / 4) / np.sqrt(2)
    assert np.abs(g.ft(f) - ref).max() < 1e-14
    assert np.abs(g.ift(g.ft(f)) - f).max() < 1e-14
    # Plancherel
    assert g.l2(f, g.dx) == pytest.approx(g.l2(g.ft(f), g.dxi), rel=1e-13)


def test_free_evolution_exact():
    d = pde.GaussianDatum(0.05, 1.0, 0.0)
    res = pde.run(ZERO, d, pde.Schedule(1e-2, (1.0, 2.0)), SMALL)
    for s in res.states[1:]:
        assert np.abs(s.u1 - 0.05 * exact_free_gaussian(SMALL.x, s.t)).max() < 1e-12
        assert not np.any(s.u2)


def test_linear_step_preserves_spectral_modulus():
    s0 = pde.initial_state(pde.GaussianDatum(0.3), SMALL)
    s1 = pde.linear_step(s0, 0.37)
    assert np.allclose(np.abs(np.fft.fft(s1.stack())), np.abs(np.fft.fft(s0.stack())), atol=1e-13)


def test_single_step_local_order():
    s0 = pde.initial_state(pde.GaussianDatum(0.05), SMALL)
    errs = []
    for dt in (2e-3, 1e-3):
        one = pde.step(MODEL_SYSTEM, s0, dt)
        two = pde.step(MODEL_SYSTEM, pde.step(MODEL_SYSTEM, s0, dt / 2), dt / 2)
        errs.append(np.abs(one.stack() - two.stack()).max(axis=-1))
    order = np.log2(errs[0] / errs[1])
    assert np.all(order > 2.7)


def test_self_convergence_order():
    d = pde.GaussianDatum(0.05)
    u = [pde.run(MODEL_SYSTEM, d, pde.Schedule(dt, (10.0,)), SMALL).states[-1].stack()
         for dt in (1e-2, 5e-3, 2.5e-3)]
    e1, e2 = np.abs(u[0] - u[1]).max(), np.abs(u[1] - u[2]).max()
    assert np.log2(e1 / e2) >= 1.8


def test_energy_drift_second_order():
    d = pde.GaussianDatum(0.05)
    sn = tuple(np.linspace(1, 10, 10))
    drift = [pde.model_conserved_checks(pde.run(MODEL_SYSTEM, d, pde.Schedule(dt, sn), SMALL).states)
             for dt in (2e-2, 1e-2)]
    ratio = drift[0]["energy_drift"] / drift[1]["energy_drift"]
    assert 3.5 < ratio < 4.5
    assert max(x["inner_drift"] for x in drift) < 1e-6


def test_step_matches_run():
    d = pde.GaussianDatum(0.2)
    s = pde.initial_state(d, SMALL)
    for _ in range(5):
        s = pde.step(MODEL_SYSTEM, s, 1e-2)
    r = pde.run(MODEL_SYSTEM, d, pde.Schedule(1e-2, (0.05,)), SMALL).states[-1]
    assert np.abs(s.stack() - r.stack()).max() < 1e-15 * 100


def test_profile_identities():
    d = pde.GaussianDatum(0.05)
    s0 = pde.initial_state(d, SMALL)
    p0 = pde.profile(s0)
    assert np.allclose(p0.stack(), SMALL.ft(s0.stack()), atol=0)
    for t in (0.5, 3.0):
        pt = pde.profile(pde.free_evolution(s0, t))
        assert np.abs(pt.stack() - p0.stack()).max() < 1e-12
    res = pde.run(MODEL_SYSTEM, pde.GaussianDatum(0.5), pde.Schedule(1e-2, (1.0, 5.0)), SMALL)
    for s in res.states:
        p = pde.profile(s)
        assert np.allclose(SMALL.l2(p.stack(), SMALL.dxi), SMALL.l2(s.stack(), SMALL.dx), rtol=1e-12)
        back = pde.field_from_profile(p)
        assert np.abs(back.stack() - s.stack()).max() < 1e-14


def test_j_norm():
    s0 = pde.initial_state(pde.GaussianDatum(1.0, 1.0, 0.0), SMALL)
    # ||x e^{-x^2}||_{L^2}^2 = sqrt(pi / 2) / 4
    ref = np.sqrt(np.sqrt(np.pi / 2) / 4)
    assert pde.j_norm(s0)[0] == pytest.approx(ref, rel=1e-10)
    assert pde.j_norm_direct(s0)[0] == pytest.approx(ref, rel=1e-10)
    for t in (0.5, 2.0):
        st = pde.free_evolution(s0, t)
        assert pde.j_norm(st)[0] == pytest.approx(ref, rel=1e-10)
        assert pde.j_norm_direct(st)[0] == pytest.approx(ref, rel=1e-10)


def test_remainders_vanish_without_nonlinearity():
    s = pde.free_evolution(pde.initial_state(pde.GaussianDatum(0.5), SMALL), 2.0)
    r1, r2 = pde.remainders(ZERO, s)
    assert not np.any(r1) and not np.any(r2)
    with pytest.raises(ValueError):
        pde.remainders(MODEL_SYSTEM, pde.initial_state(pde.GaussianDatum(0.5), SMALL))


def test_remainder_matches_profile_equation():
    # i dw/dt = F(w) / 2t + r; check by a centred difference of the exact profile flow
    d = pde.GaussianDatum(0.5)
    dt = 1e-3
    res = pde.run(MODEL_SYSTEM, d, pde.Schedule(dt, (2.0 - 4 * dt, 2.0, 2.0 + 4 * dt)), SMALL)
    pm, p0, pp = (pde.profile(s) for s in res.states[1:])
    dw = (pp.stack() - pm.stack()) / (8 * dt)
    F = np.stack(pde.eval_nonlinearity(MODEL_SYSTEM, (p0.w1, p0.w2)))
    r = np.stack(pde.remainders(MODEL_SYSTEM, p0))
    lhs = 1j * dw
    rhs = F / (2 * p0.t) + r
    assert np.abs(lhs - rhs).max() < 1e-6 * np.abs(F).max()


def test_sup_identity():
    s0 = pde.initial_state(pde.GaussianDatum(0.5), SMALL)
    for t in (1.0, 5.0):
        assert pde.sup_identity(pde.free_evolution(s0, t))["rel_err"] < 1e-12


def test_quartic_drift_and_wrap():
    q = build_quartic(to_matrix_vector(MODEL_SYSTEM))
    p = pde.profile(pde.initial_state(pde.GaussianDatum(0.05), SMALL))
    assert pde.quartic_drift(q, p, p) == 0
    assert pde.wrap_fraction(p) == 0


def test_diagnostics_zero_system():
    res = pde.run(ZERO, pde.GaussianDatum(0.1), pde.Schedule(1e-2, (1.0, 2.0)), SMALL)
    T = res.table()
    assert T.shape == (3, len(pde.DiagnosticRow.FIELDS))
    assert np.all(np.isnan(T[0, 9:13]))
    assert not np.any(T[1:, 9:13])
    # no coercive quartic invariant for the zero system
    assert np.all(np.isnan(T[:, 13]))


def test_asymptotic_match_and_extraction_without_nonlinearity():
    res = pde.run(ZERO, pde.GaussianDatum(0.1), pde.Schedule(1e-2, (10.0, 20.0)), SMALL)
    p1, p2 = (pde.profile(s) for s in res.states[1:])
    m = pde.asymptotic_match(ZERO, p1, p2)
    assert m["linf"] < 1e-13 and m["dtau"] == pytest.approx(0.5 * np.log(2))
    ex = pde.extract_scattering_state(ZERO, p1, p_check=p2)
    p0 = pde.profile(res.states[0])
    assert np.abs(ex["psi1"] - p0.w1).max() < 1e-12 and ex["stability"] < 1e-12
    with pytest.raises(ValueError):
        pde.extract_scattering_state(ZERO, pde.profile(res.states[0]))


def test_model_conserved_checks():
    res = pde.run(ZERO, pde.GaussianDatum(0.1), pde.Schedule(1e-2, (1.0, 2.0)), SMALL)
    with pytest.raises(WrongSystem):
        pde.model_conserved_checks(res.states, ZERO)
    res = pde.run(MODEL_SYSTEM, pde.GaussianDatum(0.1), pde.Schedule(1e-2, (1.0, 2.0)), SMALL)
    mc = pde.model_conserved_checks(res.states)
    assert mc["inner_drift"] < 1e-10


def test_blow_up_reported():
    big = CubicSystem(1e6 * np.eye(12)[0])
    with pytest.raises(NonFinite) as ei:
        pde.run(big, pde.GaussianDatum(10.0, 1.0, 0.0), pde.Schedule(0.1, (50.0,)), SMALL)
    assert 0 < ei.value.time <= 50.0


def test_validation():
    with pytest.raises(ValueError):
        pde.Grid(10.0, 1000)
    with pytest.raises(ValueError):
        pde.Schedule(1e-3, (2.0, 1.0))
    with pytest.raises(ValueError):
        pde.Schedule(0.3, (1.0,)).step_counts()
    with pytest.raises(NonFinite):
        pde.FieldState(np.array([np.nan]), np.array([0.0]), 0.0, SMALL)


def test_fit_exponent():
    t = np.array([1.0, 10.0, 100.0])
    assert pde.fit_exponent(t, 3 * t**-1.25) == pytest.approx(-1.25)
