"""Chern-Weil forms from curvature input and integration over the torus base.

Matrices of forms are coefficient arrays of shape ``(..., k, k, 2^p)``.  All
curvature entries have degree 2, so they commute and powers are summed
exactly up to form degree ``p``.

``l_form`` evaluates ``phi det^{1/2}(R / tanh(R/2))``.  Because
``x / tanh(x/2) = 2 (x/2) coth(x/2)`` the degree-0 part of this expression is
``2^{p/2}``; ``normalization="unit"`` divides that constant out.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .exterior import Form, FormContext, phi_normalize

__all__ = [
    "bernoulli_numbers",
    "half_coth_series",
    "log_half_coth_series",
    "form_matmul",
    "form_trace",
    "l_form",
    "chern_char",
    "integrate_over_base",
    "flat_torus_l_degree0",
]


@lru_cache(maxsize=None)
def bernoulli_numbers(n: int) -> tuple[Fraction, ...]:
    """``B_0 .. B_n`` with ``B_1 = -1/2``."""
    B = [Fraction(1)]
    for m in range(1, n + 1):
        B.append(-sum(math.comb(m + 1, j) * B[j] for j in range(m)) / (m + 1))
    return tuple(B)


@lru_cache(maxsize=None)
def half_coth_series(order: int) -> tuple[Fraction, ...]:
    """Coefficients of ``x^{2j}``, ``j = 0..order``, in ``(x/2) coth(x/2) = sum B_{2j} x^{2j} / (2j)!``."""
    B = bernoulli_numbers(2 * order)
    return tuple(B[2 * j] / math.factorial(2 * j) for j in range(order + 1))


@lru_cache(maxsize=None)
def log_half_coth_series(order: int) -> tuple[Fraction, ...]:
    """Coefficients of ``x^{2j}`` in ``log((x/2) coth(x/2))`` (exact rationals)."""
    c = half_coth_series(order)
    s = [Fraction(0)] + list(c[1:])  # series minus 1, in powers of y = x^2
    out = [Fraction(0)] * (order + 1)
    power = [Fraction(1)] + [Fraction(0)] * order
    for m in range(1, order + 1):
        power = [sum(power[i] * s[j - i] for i in range(j + 1)) for j in range(order + 1)]
        sign = Fraction((-1) ** (m + 1), m)
        out = [o + sign * q for o, q in zip(out, power)]
    return tuple(out)


def form_matmul(ctx: FormContext, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product of form-valued matrices, ``(a b)_{ij} = sum_l a_{il} ^ b_{lj}``."""
    left, right, out, sign = ctx.product_table()
    prod = np.einsum("...ilm,...ljm->...ijm", a[..., left], b[..., right]) * sign
    res = np.zeros(prod.shape[:-1] + (ctx.dim,), dtype=complex)
    for k in range(ctx.dim):
        res[..., k] = prod[..., out == k].sum(axis=-1)
    return res


def form_trace(a: np.ndarray) -> np.ndarray:
    return np.einsum("...iim->...m", a)


def _identity(ctx: FormContext, k: int, batch=()):
    out = np.zeros(tuple(batch) + (k, k, ctx.dim), dtype=complex)
    out[..., np.arange(k), np.arange(k), 0] = 1.0
    return out


def _check_curvature(ctx: FormContext, R: np.ndarray, antisymmetric: bool):
    R = np.asarray(R, dtype=complex)
    if R.ndim < 3 or R.shape[-1] != ctx.dim or R.shape[-2] != R.shape[-3]:
        raise ValueError(f"curvature must have shape (..., k, k, {ctx.dim}), got {R.shape}")
    if np.any(np.abs(R[..., ctx.degrees != 2]) > 0):
        raise ValueError("curvature entries must be pure degree-2 forms")
    if antisymmetric and not np.allclose(R, -np.swapaxes(R, -2, -3), atol=1e-12):
        raise ValueError("tangent curvature must be antisymmetric")
    return R


def l_form(ctx: FormContext, R_TB, normalization: str = "paper", root_of_i=None) -> Form:
    """Hirzebruch form ``phi det^{1/2}(R / tanh(R/2))`` of a tangent curvature.

    Computed as ``exp(1/2 tr log(...))`` with the exact series of
    :func:`log_half_coth_series`; no matrix square roots are taken.
    ``normalization="paper"`` keeps the constant ``2^{p/2}`` coming from
    ``x / tanh(x/2) -> 2``; ``"unit"`` drops it so the degree-0 part is 1.
    """
    R = _check_curvature(ctx, R_TB, antisymmetric=True)
    if normalization not in ("paper", "unit"):
        raise ValueError("normalization must be 'paper' or 'unit'")
    p = ctx.p
    order = p // 4 + 1  # tr R^{2j} has degree 4j
    coeffs = log_half_coth_series(order)
    batch = R.shape[:-3]
    R2 = form_matmul(ctx, R, R)
    power = _identity(ctx, R.shape[-2], batch)
    log_det = np.zeros(tuple(batch) + (ctx.dim,), dtype=complex)
    for j in range(1, order + 1):
        power = form_matmul(ctx, power, R2)
        log_det = log_det + float(coeffs[j]) * form_trace(power)
    half = Form(ctx, 0.5 * log_det)
    out = _form_exp(ctx, half)
    if normalization == "paper":
        out = out * (2.0 ** (p / 2))
    return phi_normalize(out) if root_of_i is None else phi_normalize(out, root_of_i)


def _form_exp(ctx: FormContext, a: Form) -> Form:
    """``exp`` of a form with zero degree-0 part (nilpotent, exact)."""
    if np.any(np.abs(a.coeffs[..., 0]) > 0):
        raise ValueError("form exponential expects vanishing degree-0 part")
    out = Form(ctx, np.zeros(a.shape + (ctx.dim,), complex)) + 1.0
    term = out
    for j in range(1, ctx.p // 2 + 1):
        term = (term ^ a) * (1.0 / j)
        out = out + term
    return out


def chern_char(ctx: FormContext, R_mu, root_of_i=None) -> Form:
    """``phi tr exp(-R_mu)``; the exponential series terminates at degree ``p``."""
    R = _check_curvature(ctx, R_mu, antisymmetric=False)
    k = R.shape[-2]
    batch = R.shape[:-3]
    term = _identity(ctx, k, batch)
    total = term.copy()
    for j in range(1, ctx.p // 2 + 1):
        term = form_matmul(ctx, term, -R) / j
        total = total + term
    out = Form(ctx, form_trace(total))
    return phi_normalize(out) if root_of_i is None else phi_normalize(out, root_of_i)


def integrate_over_base(values, period: float = 2 * np.pi) -> complex:
    """Integral over ``[0, period)^p`` of the top-degree coefficient.

    ``values`` is a :class:`Form` (or coefficient array) sampled on a uniform
    periodic grid; the leading axes are the grid axes.  The trapezoidal rule is
    spectrally accurate for smooth periodic integrands.
    """
    coeffs = values.coeffs if isinstance(values, Form) else np.asarray(values)
    dim = coeffs.shape[-1]
    p = dim.bit_length() - 1
    if 1 << p != dim:
        raise ValueError("last axis must have length 2^p")
    top = coeffs[..., dim - 1]
    if top.size == 0:
        raise ValueError("empty grid")
    return complex(top.mean() * period**p)


def flat_torus_l_degree0(p: int, normalization: str = "paper") -> float:
    """Degree-0 part of the Hirzebruch form on a flat base (the whole form there)."""
    return 2.0 ** (p / 2) if normalization == "paper" else 1.0
