import numpy as np
import pytest


def open_uniform(lo, hi, nelem, d):
    """Open knot vector with uniform interior breaks."""
    inner = np.linspace(lo, hi, nelem + 1)
    return np.concatenate([[lo] * d, inner, [hi] * d])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def sin2():
    # product of sines with closed-form partials (phase shifts)
    from boxqi.approxop import FunctionOracle

    return FunctionOracle(
        f=lambda X: np.sin(np.pi * X[:, 0]) * np.sin(np.pi * X[:, 1]),
        deriv=lambda a, X: (np.pi ** (a[0] + a[1])
                            * np.sin(np.pi * X[:, 0] + a[0] * np.pi / 2)
                            * np.sin(np.pi * X[:, 1] + a[1] * np.pi / 2)),
        order=12,
    )
