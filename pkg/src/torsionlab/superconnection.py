"""Rescaled superconnections ``C_u`` and the odd elements ``D_u`` of a flat complex.

With ``A_u = Gamma + omega/2 + (sqrt(u)/2)(v + v*)`` the superconnection is
``C_u = d + A_u`` and

    D_u = omega/2 + (sqrt(u)/2)(v* - v).

Two parametrizations are in use: ``d_u(pd, u)`` is the factor-``sqrt(u)/2``
family, and ``d_4t(pd, t) = d_u(pd, 4t)`` carries a plain ``sqrt(t)`` factor.
"""
from __future__ import annotations

import numpy as np

from .calculus import exterior_derivative
from .flat_complex import FlatComplexSpec, PointData, point_data
from .supermatrix import SuperElement, smul, supercommutator

__all__ = [
    "d_u",
    "d_4t",
    "c_u_coeff",
    "c_4t_coeff",
    "curvature_c_u",
    "check_identities",
    "covariant_d",
]


def _sqrt_scale(u):
    u = np.asarray(u, float)
    if np.any(u < 0):
        raise ValueError("scale u must be non-negative")
    return np.sqrt(u)


def _bcast(pd: PointData, u):
    """Broadcast a scale array ``u`` against the point batch (u axes first)."""
    s = _sqrt_scale(u)
    return s.reshape(s.shape + (1,) * (len(pd.shape) + 2))


def d_u(pd: PointData, u) -> SuperElement:
    """``omega/2 + (sqrt(u)/2)(v* - v)``; ``u`` may be an array (prepended batch axes)."""
    s = _bcast(pd, u)
    odd0 = 0.5 * s * (pd.vstar - pd.v)
    one = pd.omega_se.entries * 0.5
    one = np.broadcast_to(one, odd0.shape[:-2] + one.shape[-3:]).copy()
    one[..., 0, :, :] += odd0
    return SuperElement(pd.ctx, pd.space, one)


def d_4t(pd: PointData, t) -> SuperElement:
    return d_u(pd, 4 * np.asarray(t, float))


def c_u_coeff(pd: PointData, u) -> SuperElement:
    """Non-derivative coefficient ``Gamma + omega/2 + (sqrt(u)/2)(v + v*)`` of ``C_u``."""
    s = _bcast(pd, u)
    even0 = 0.5 * s * (pd.vstar + pd.v)
    one = (pd.gamma_se.entries + 0.5 * pd.omega_se.entries)
    one = np.broadcast_to(one, even0.shape[:-2] + one.shape[-3:]).copy()
    one[..., 0, :, :] += even0
    return SuperElement(pd.ctx, pd.space, one)


def c_4t_coeff(pd: PointData, t) -> SuperElement:
    return c_u_coeff(pd, 4 * np.asarray(t, float))


def covariant_d(spec: FlatComplexSpec, x, fn, n: int = 48) -> SuperElement:
    """Exterior derivative of the super-element field ``x -> fn(point_data(spec, x))``.

    Evaluated spectrally at the points ``x``.
    """
    ent = exterior_derivative(
        lambda pts: fn(point_data(spec, pts)).entries,
        x,
        spec.ctx,
        spec.periods,
        mono_axis=-3,
        n=n,
    )
    return SuperElement(spec.ctx, spec.space, ent)


def curvature_c_u(spec: FlatComplexSpec, x, u, n: int = 48) -> SuperElement:
    """``C_u^2 = dA_u + A_u A_u`` with ``dA_u`` by spectral differentiation."""
    pd = point_data(spec, x)
    A = c_u_coeff(pd, u)
    dA = covariant_d(spec, x, lambda q: c_u_coeff(q, u), n=n)
    return dA + smul(A, A)


def _superconn_square(spec, x, coeff_fn, n):
    """``(d + B)^2 = dB + B B`` for a coefficient field ``B = coeff_fn(pd)``."""
    pd = point_data(spec, x)
    B = coeff_fn(pd)
    return covariant_d(spec, x, coeff_fn, n=n) + smul(B, B)


def check_identities(spec: FlatComplexSpec, x, u: float, r: float, n: int = 48) -> dict:
    """Residual norms of the structural superconnection identities at ``x``.

    Keys:

    ``curvature``      ``C_u^2 + D_u^2``
    ``bracket``        ``[C_u, D_u] = dD_u + [A_u, D_u]``
    ``deformed``       ``(C_u + i r D_u)^2 - (1 + r^2) C_u^2``
    ``deformed_d``     ``(C_u + i r D_u)^2 + (1 + r^2) D_u^2``
    ``number_d``       ``v + v* + 2 u^{-1/2} [N, D_u]``
    ``number_c``       ``v* - v + 2 u^{-1/2} [N, C_u]``
    ``twisted_square`` ``((1 - ir) v + (1 + ir) v*)^2 - (1 + r^2)(v + v*)^2``
    """
    if u <= 0:
        raise ValueError("identities need u > 0")
    pd = point_data(spec, x)
    A = c_u_coeff(pd, u)
    D = d_u(pd, u)
    C2 = _superconn_square(spec, x, lambda q: c_u_coeff(q, u), n)
    D2 = smul(D, D)
    dD = covariant_d(spec, x, lambda q: d_u(q, u), n=n)
    bracket = dD + supercommutator(A, D)
    Cr2 = _superconn_square(spec, x, lambda q: c_u_coeff(q, u) + d_u(q, u) * (1j * r), n)
    N = pd.number_se
    sq = np.sqrt(u)
    res = {
        "curvature": (C2 + D2).norm(),
        "bracket": bracket.norm(),
        "deformed": (Cr2 - C2 * (1 + r * r)).norm(),
        "deformed_d": (Cr2 + D2 * (1 + r * r)).norm(),
        "number_d": float(
            np.abs((pd.v + pd.vstar) + (2 / sq) * supercommutator(N, D).matrix(0)).max()
        ),
        "number_c": float(
            np.abs((pd.vstar - pd.v) + (2 / sq) * supercommutator(N, A).matrix(0)).max()
        ),
    }
    tw = (1 - 1j * r) * pd.v + (1 + 1j * r) * pd.vstar
    vv = pd.v + pd.vstar
    res["twisted_square"] = float(np.abs(tw @ tw - (1 + r * r) * (vv @ vv)).max())
    # [N, C_u] must not see the form-degree-1 part of A (N commutes with Gamma + omega/2)
    res["number_c_form"] = supercommutator(N, A).form_part(1).norm()
    return res
