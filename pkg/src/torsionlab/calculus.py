"""Spectral exterior derivatives of form-valued functions on the torus."""
from __future__ import annotations

import numpy as np

from .exterior import FormContext, merge_sign

__all__ = ["partial_derivatives", "exterior_derivative", "apply_d"]


def partial_derivatives(fn, x, periods, n: int = 48):
    """Partial derivatives at ``x`` of a smooth periodic array-valued ``fn``.

    For each axis ``a`` the function is sampled on ``n`` equispaced points of the
    closed line through ``x`` along ``a`` and differentiated with the FFT; this
    is exact for trig polynomials of degree < n/2 and spectrally accurate for
    analytic data.  ``fn`` maps points of shape ``(..., p)`` to arrays of shape
    ``(..., *out)``.  Returns shape ``(p, *x.shape[:-1], *out)``.
    """
    x = np.asarray(x, float)
    p = x.shape[-1]
    k = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    out = []
    for a in range(p):
        L = periods[a]
        offsets = np.arange(n) * (L / n)
        pts = np.repeat(x[None], n, axis=0)
        pts[..., a] += offsets.reshape((n,) + (1,) * (x.ndim - 1))
        vals = np.asarray(fn(pts))
        # derivative at offset 0 = sum_m i k_m c_m
        coef = np.fft.fft(vals, axis=0) / n
        w = (1j * k * (2 * np.pi / L)).reshape((n,) + (1,) * (vals.ndim - 1))
        out.append((coef * w).sum(axis=0))
    return np.stack(out)


def apply_d(partials, ctx: FormContext, mono_axis: int):
    """Assemble ``sum_a dx^a ^ d_a f`` from partials.

    ``partials`` has shape ``(p, ...)`` where the remaining array carries the
    exterior monomial index on ``mono_axis`` (counted after the leading ``p``).
    The result has the shape of one partial.
    """
    partials = np.moveaxis(np.asarray(partials), mono_axis + 1, 1)
    res = np.zeros(partials.shape[1:], dtype=complex)
    for a in range(ctx.p):
        g = 1 << a
        for m in range(ctx.dim):
            s = merge_sign(g, m)
            if s:
                res[g | m] += s * partials[a, m]
    return np.moveaxis(res, 0, mono_axis)


def exterior_derivative(fn, x, ctx: FormContext, periods, mono_axis: int = -1, n: int = 48):
    """``d`` of a form-valued function (monomial index on ``mono_axis`` of the output).

    For matrix-of-forms (super element) entries ``(..., 2**p, R, R)`` use
    ``mono_axis=-3``; the Koszul rule gives ``[d, a (x) M] = da (x) M`` so no
    extra signs enter.
    """
    parts = partial_derivatives(fn, x, periods, n=n)
    ndim_out = parts.ndim - 1
    axis = mono_axis % ndim_out
    return apply_d(parts, ctx, axis)
