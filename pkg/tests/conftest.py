import numpy as np
import pytest

from nlslab.system_repr import CubicSystem


def oracle_F(lam, a, b):
    """Nonlinearity written monomial by monomial, independent of the package kernels."""
    l1, l2, l3, l4, l5, l6, l7, l8, l9, l10, l11, l12 = lam
    F1 = (l1 * abs(a) ** 2 * a + l2 * abs(a) ** 2 * b + l3 * a**2 * np.conj(b)
          + l4 * abs(b) ** 2 * a + l5 * b**2 * np.conj(a) + l6 * abs(b) ** 2 * b)
    F2 = (l7 * abs(a) ** 2 * a + l8 * abs(a) ** 2 * b + l9 * a**2 * np.conj(b)
          + l10 * abs(b) ** 2 * a + l11 * b**2 * np.conj(a) + l12 * abs(b) ** 2 * b)
    return F1, F2


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_system(rng) -> CubicSystem:
    return CubicSystem(rng.normal(size=12))


_CRITERION_8 = {}


@pytest.fixture(scope="session")
def criterion8_result():
    """Criterion 8 at its full configuration, computed once per session."""
    if "r" not in _CRITERION_8:
        from nlslab import acceptance

        _CRITERION_8["r"] = acceptance.criterion_8()
    return _CRITERION_8["r"]
