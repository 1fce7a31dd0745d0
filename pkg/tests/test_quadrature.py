import numpy as np
import pytest

from resetctrl.quadrature import integrate_operator, integrate_scalar


def test_polynomial():
    assert integrate_scalar(lambda z: 3 * z * z) == pytest.approx(1.0, abs=1e-12)


def test_oscillatory():
    assert integrate_scalar(lambda z: np.sin(11 * z)) == pytest.approx(
        (1 - np.cos(11.0)) / 11.0, abs=1e-11
    )


def test_breakpoint_splitting_handles_kink():
    f = lambda z: abs(z - 1 / 3)
    exact = (1 / 3) ** 2 / 2 + (2 / 3) ** 2 / 2
    assert integrate_scalar(f, breakpoints=(1 / 3,)) == pytest.approx(exact, abs=1e-12)


def test_subinterval():
    assert integrate_scalar(np.cos, 0.2, 1.4) == pytest.approx(
        np.sin(1.4) - np.sin(0.2), abs=1e-12
    )


def test_empty_interval():
    assert integrate_scalar(np.cos, 1.0, 1.0) == 0.0


def test_operator_valued(rng):
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    b = rng.normal(size=(3, 3))
    got = integrate_operator(lambda z: a * np.exp(-z) + b * z)
    expected = a * (1 - np.exp(-1.0)) + b / 2
    np.testing.assert_allclose(got, expected, atol=1e-10)
