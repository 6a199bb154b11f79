import numpy as np
import pytest
from scipy.special import bernoulli

from torsionlab.char_forms import (
    bernoulli_numbers,
    chern_char,
    flat_torus_l_degree0,
    form_matmul,
    form_trace,
    half_coth_series,
    integrate_over_base,
    l_form,
    log_half_coth_series,
)
from torsionlab.exterior import FormContext


def test_bernoulli_against_scipy():
    ours = np.array([float(b) for b in bernoulli_numbers(12)])
    assert np.allclose(ours, bernoulli(12))


def test_half_coth_series_numeric():
    x = 0.3
    c = half_coth_series(6)
    approx = sum(float(cj) * x ** (2 * j) for j, cj in enumerate(c))
    assert np.isclose(approx, (x / 2) / np.tanh(x / 2), rtol=1e-14)
    lc = log_half_coth_series(6)
    approx = sum(float(cj) * x ** (2 * j) for j, cj in enumerate(lc))
    assert np.isclose(approx, np.log((x / 2) / np.tanh(x / 2)), rtol=1e-12)


def _two_form(ctx, **comps):
    out = np.zeros(ctx.dim, complex)
    for lab, val in comps.items():
        out[ctx.labels.index(lab.replace("_", "^"))] = val
    return out


def skew_block(ctx, a):
    R = np.zeros((2, 2, ctx.dim), complex)
    R[0, 1], R[1, 0] = a, -a
    return R


def test_l_form_closed_form_p4():
    ctx = FormContext(4)
    alpha, beta = 0.7, -1.3
    a = _two_form(ctx, dx1_dx2=alpha, dx3_dx4=beta)
    R = np.zeros((4, 4, ctx.dim), complex)
    R[:2, :2] = skew_block(ctx, a)
    # unit L = (a/2)/tan(a/2) = 1 - a^2/12, a^2 = 2 alpha beta dx1234; phi(deg 4) = (2 pi i)^{-2}
    L = l_form(ctx, R, normalization="unit")
    assert np.isclose(L.coeffs[0], 1)
    assert np.isclose(L.coeffs[-1], alpha * beta / (24 * np.pi**2))
    Lp = l_form(ctx, R, normalization="paper")
    assert np.allclose(Lp.coeffs, 4 * L.coeffs)


def test_l_form_flat_base():
    ctx = FormContext(2)
    R = np.zeros((2, 2, ctx.dim))
    assert np.allclose(l_form(ctx, R).coeffs, [2, 0, 0, 0])
    assert flat_torus_l_degree0(2) == 2 and flat_torus_l_degree0(2, "unit") == 1


def test_l_form_rejects_bad_curvature():
    ctx = FormContext(2)
    R = np.zeros((2, 2, ctx.dim))
    R[0, 1, 1] = 1.0  # degree 1
    with pytest.raises(ValueError):
        l_form(ctx, R)
    R = np.zeros((2, 2, ctx.dim))
    R[0, 1, 3] = 1.0  # not antisymmetric
    with pytest.raises(ValueError):
        l_form(ctx, R)
    with pytest.raises(ValueError):
        l_form(ctx, np.zeros((2, 2, 4)), normalization="other")


def test_chern_char_line_bundle():
    ctx = FormContext(2)
    theta = 0.5
    R = np.zeros((1, 1, ctx.dim), complex)
    R[0, 0, 3] = theta
    ch = chern_char(ctx, R)
    assert np.allclose(ch.coeffs, [1, 0, 0, -theta / (2j * np.pi)])


def test_chern_char_is_additive_on_sums():
    ctx = FormContext(4)
    a = _two_form(ctx, dx1_dx2=0.4, dx2_dx3=0.1)
    b = _two_form(ctx, dx3_dx4=-0.9, dx1_dx4=0.3)
    R = np.zeros((2, 2, ctx.dim), complex)
    R[0, 0], R[1, 1] = a, b
    one = lambda z: z.reshape(1, 1, -1)  # noqa: E731
    lhs = chern_char(ctx, R).coeffs
    rhs = chern_char(ctx, one(a)).coeffs + chern_char(ctx, one(b)).coeffs
    assert np.allclose(lhs, rhs)


def test_form_matmul_trace_cyclic(rng):
    ctx = FormContext(4)
    mask = ctx.degrees == 2
    a = np.zeros((3, 3, ctx.dim), complex)
    b = np.zeros_like(a)
    a[..., mask] = rng.standard_normal((3, 3, mask.sum()))
    b[..., mask] = rng.standard_normal((3, 3, mask.sum()))
    # even forms commute, so tr(ab) = tr(ba)
    assert np.allclose(form_trace(form_matmul(ctx, a, b)), form_trace(form_matmul(ctx, b, a)))


def test_integrate_over_base():
    n = 16
    x = np.arange(n) * 2 * np.pi / n
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    vals = np.zeros((n, n, 4))
    vals[..., 3] = 1 + np.cos(X1) * np.sin(2 * X2)
    assert np.isclose(integrate_over_base(vals), 4 * np.pi**2)
    with pytest.raises(ValueError):
        integrate_over_base(np.zeros((0, 4)))
    with pytest.raises(ValueError):
        integrate_over_base(np.zeros((3, 5)))
