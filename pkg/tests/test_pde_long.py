"""Checks on the full-length model runs shared with acceptance criterion 8."""
import numpy as np
import pytest

from nlslab import pde
from nlslab.system_repr import MODEL_SYSTEM

EPS = 0.05


@pytest.fixture(scope="module")
def run(criterion8_result):
    return criterion8_result.artifacts["runs"][EPS]


@pytest.fixture(scope="module")
def table(run):
    return run.table()


def col(T, name):
    return T[:, pde.DiagnosticRow.FIELDS.index(name)]


def test_profile_norm_equals_field_norm(run):
    for s in run.states:
        p = pde.profile(s)
        for u, w in ((s.u1, p.w1), (s.u2, p.w2)):
            assert s.grid.l2(w, s.grid.dxi) == pytest.approx(s.grid.l2(u, s.grid.dx), rel=1e-12)


def test_j_norm_bound(table):
    t = col(table, "t")
    J = col(table, "J_1") + col(table, "J_2")
    assert np.all(J <= 2 * EPS * (1 + t) ** (0.1 * EPS**2))


def test_remainder_l2_exponent(table):
    t = col(table, "t")
    win = (t >= 10.0) & (t <= 200.0)
    for j in (1, 2):
        ex = pde.fit_exponent(t[win], col(table, f"r_l2_{j}")[win])
        assert abs(ex + 1.5) <= 0.15, f"r_l2_{j} exponent {ex:.3f}"


def test_extraction_stability(run):
    p100, p200 = pde.profile(run.state_at(100.0)), pde.profile(run.state_at(200.0))
    ex = pde.extract_scattering_state(MODEL_SYSTEM, p100, p_check=p200)
    assert ex["stability"] <= 5e-3 * EPS
