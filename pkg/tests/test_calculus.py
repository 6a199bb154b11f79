import numpy as np

from torsionlab.calculus import exterior_derivative, partial_derivatives
from torsionlab.exterior import FormContext

TWO_PI = (2 * np.pi,) * 3


def one_form(x):
    """``sin(x1) cos(x2) dx1 + cos(x3) dx2 + x-dependent dx3`` as coefficient arrays."""
    out = np.zeros(x.shape[:-1] + (8,), complex)
    out[..., 1] = np.sin(x[..., 0]) * np.cos(x[..., 1])
    out[..., 2] = np.cos(x[..., 2])
    out[..., 4] = np.sin(x[..., 0] + 2 * x[..., 1])
    return out


def test_partials_exact_for_trig():
    x = np.array([[0.4, 1.3, 2.2]])
    d = partial_derivatives(lambda y: np.sin(2 * y[..., 0]) * np.cos(y[..., 2]), x, TWO_PI, n=16)
    assert np.allclose(d[:, 0], [2 * np.cos(0.8) * np.cos(2.2), 0, -np.sin(0.8) * np.sin(2.2)])


def test_d_of_one_form():
    ctx = FormContext(3)
    x = np.array([0.3, 0.9, 1.7])
    dw = exterior_derivative(one_form, x[None], ctx, TWO_PI, n=16)[0]
    # d(f dx1) = d2 f dx2^dx1 + ... ; coefficients on dx1^dx2 (mask 3) etc.
    d2f1 = -np.sin(0.3) * np.sin(0.9)
    d1f3, d2f3 = np.cos(0.3 + 1.8), 2 * np.cos(0.3 + 1.8)
    d3f2 = -np.sin(1.7)
    assert np.isclose(dw[3], -d2f1)
    assert np.isclose(dw[5], d1f3)
    assert np.isclose(dw[6], d2f3 - d3f2)


def test_d_squared_vanishes():
    ctx = FormContext(3)
    x = np.array([[0.3, 0.9, 1.7], [2.0, 0.1, 5.0]])

    def dw(y):
        return exterior_derivative(one_form, y, ctx, TWO_PI, n=16)

    ddw = exterior_derivative(dw, x, ctx, TWO_PI, n=16)
    assert np.abs(ddw).max() < 1e-11
