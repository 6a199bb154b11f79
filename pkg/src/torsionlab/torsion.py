"""Torsion forms of an acyclic flat complex, pointwise on the base.

Three objects are computed from the odd elements ``D_u`` of
:mod:`torsionlab.superconnection`:

``T_r``
    ``zeta'(0)`` of ``-Gamma(s)^{-1} int t^{s-1} phi str[N D_t^2 e^{(1+r^2) D_t^2}] dt``.
``T~_r``
    ``zeta'(0)`` of ``-Gamma(s)^{-1} int t^{s} phi str[t^{-1/2} D_{4t} W e^{(1+r^2) D_{4t}^2}] dt``
    with ``W = d/d sqrt(t) (C_{4t} + i r D_{4t}) = (v + v*) + i r (v* - v)``.
``T`` (finite-dimensional analogue of the Bismut-Lott form)
    ``-int_0^inf (phi str[N (1 + 2 D_u^2) e^{D_u^2}] - str[N](1 - u/2) e^{-u/4}) du/(2u)``.

All three are returned as :class:`~torsionlab.exterior.Form` objects batched
over the base points of the supplied :class:`~torsionlab.flat_complex.PointData`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .asymptotics import (
    DEFAULT_EXPONENTS,
    DEFAULT_SPLIT,
    DEFAULT_WINDOW,
    RegularizedIntegral,
    regularized_time_integral,
)
from .calculus import exterior_derivative
from .exterior import Form, phi_factors
from .flat_complex import FlatComplexSpec, PointData, point_data, sample_grid
from .superconnection import d_4t, d_u
from .supermatrix import SuperElement, smul, superexp, supertrace

__all__ = [
    "AcyclicityError",
    "TorsionOptions",
    "integrand_T",
    "integrand_T_tilde",
    "integrand_bl",
    "torsion_T",
    "torsion_T_tilde",
    "bl_torsion",
    "degree0_T",
    "degree0_bl",
    "check_dmz6",
    "check_dmz7",
    "integrate_T_field",
    "TorsionReport",
    "torsion_report",
]


class AcyclicityError(ValueError):
    """The complex is not acyclic at some point, so heat traces do not decay."""


@dataclass(frozen=True)
class TorsionOptions:
    """Quadrature settings shared by the three torsion forms."""

    split: float = DEFAULT_SPLIT
    window: tuple = DEFAULT_WINDOW
    exponents: tuple = DEFAULT_EXPONENTS
    n_fit: int = 40
    decay_margin: float = 40.0  # t_max = decay_margin / rate
    panel_width: float = 1.5
    order: int = 12
    chunk: int = 4096  # max (time x point) batch per superexp call
    acyclic_tol: float = 1e-10


def _phi(pd: PointData):
    return phi_factors(pd.ctx)


def _chunked(pd: PointData, t, kernel, opts: TorsionOptions):
    """Evaluate ``kernel(pd, t_chunk)`` -> Form coeffs ``(T, *pts, dim)`` in time chunks."""
    t = np.atleast_1d(np.asarray(t, float))
    npts = max(1, int(np.prod(pd.shape)))
    step = max(1, opts.chunk // npts)
    parts = [kernel(pd, t[i : i + step]) for i in range(0, t.size, step)]
    return np.concatenate(parts, axis=0)


def _expand_pd(pd: PointData, t):
    """Broadcast the number operator to the ``(T, *pts)`` batch."""
    N = np.broadcast_to(pd.space.number_operator, t.shape + pd.v.shape).astype(complex)
    return SuperElement.from_matrix(pd.ctx, pd.space, N)


def _t_kernel(r):
    def kern(pd, t):
        D = d_u(pd, t)
        D2 = smul(D, D)
        E = superexp(D2 * (1 + r * r))
        N = _expand_pd(pd, t)
        return supertrace(smul(N, smul(D2, E))).coeffs * _phi(pd)

    return kern


def integrand_T(pd: PointData, t, r: float, opts: TorsionOptions | None = None) -> Form:
    """``phi str[N D_t^2 exp((1+r^2) D_t^2)]`` with coefficients shaped ``(T, *pts, 2^p)``."""
    opts = opts or TorsionOptions()
    t = np.atleast_1d(np.asarray(t, float))
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    return Form(pd.ctx, _chunked(pd, t, _t_kernel(r), opts))


def _w_element(pd: PointData, r):
    w = (pd.v + pd.vstar) + 1j * r * (pd.vstar - pd.v)
    return SuperElement.from_matrix(pd.ctx, pd.space, w)


def _tilde_kernel(r, with_t: bool):
    def kern(pd, t):
        D = d_4t(pd, t)
        D2 = smul(D, D)
        E = superexp(D2 * (1 + r * r))
        W = _w_element(pd, r)
        val = supertrace(smul(D, smul(W, E))).coeffs * _phi(pd)
        # t * t^{-1/2} when the Mellin weight t^s dt is folded into t^{s-1} dt
        power = 0.5 if with_t else -0.5
        return val * (t**power).reshape(t.shape + (1,) * (val.ndim - 1))

    return kern


def integrand_T_tilde(pd: PointData, t, r: float, opts: TorsionOptions | None = None) -> Form:
    """``phi str[t^{-1/2} D_{4t} W exp((1+r^2) D_{4t}^2)]``."""
    opts = opts or TorsionOptions()
    t = np.atleast_1d(np.asarray(t, float))
    return Form(pd.ctx, _chunked(pd, t, _tilde_kernel(r, False), opts))


def _bl_kernel(pd, u):
    D = d_u(pd, u)
    D2 = smul(D, D)
    E = superexp(D2)
    N = _expand_pd(pd, u)
    one = N * 0.0
    one.entries[..., 0, :, :] += np.eye(pd.space.dim)
    val = supertrace(smul(N, smul(one + D2 * 2.0, E))).coeffs * _phi(pd)
    counter = pd.spec.str_number * (1 - u / 2) * np.exp(-u / 4)
    val[..., 0] -= counter.reshape(u.shape + (1,) * (val.ndim - 2))
    return val


def integrand_bl(pd: PointData, u, opts: TorsionOptions | None = None) -> Form:
    """``phi str[N (1 + 2 D_u^2) e^{D_u^2}] - str[N] (1 - u/2) e^{-u/4}``."""
    opts = opts or TorsionOptions()
    u = np.atleast_1d(np.asarray(u, float))
    return Form(pd.ctx, _chunked(pd, u, _bl_kernel, opts))


def _lambda_min(pd: PointData, tol: float) -> float:
    """Smallest eigenvalue of ``(v + v*)^2`` over the point batch."""
    lam = np.linalg.eigvals(pd.laplacian()).real
    m = float(lam.min())
    if m <= tol:
        raise AcyclicityError(f"(v + v*)^2 has eigenvalue {m:.3g}; complex is not acyclic")
    return m


def _regularize(pd, kernel, rate, opts: TorsionOptions, scale=1.0):
    t_max = opts.decay_margin / rate

    def fn(t):
        return scale * _chunked(pd, np.asarray(t, float), kernel, opts)

    return regularized_time_integral(
        fn,
        t_max=t_max,
        split=opts.split,
        window=opts.window,
        exponents=opts.exponents,
        n_fit=opts.n_fit,
        panel_width=opts.panel_width,
        order=opts.order,
        tail_rate=rate,
    )


def _as_pd(point, x=None) -> PointData:
    if isinstance(point, PointData):
        return point
    if isinstance(point, FlatComplexSpec):
        if x is None:
            raise ValueError("base point x required with a spec")
        return point_data(point, x)
    raise TypeError("expected PointData or FlatComplexSpec")


def torsion_T(point, r: float = 0.0, x=None, opts: TorsionOptions | None = None, details=False):
    """``T_r`` at the base points of ``point`` (``PointData``, or a spec plus ``x``)."""
    opts = opts or TorsionOptions()
    pd = _as_pd(point, x)
    rate = (1 + r * r) * _lambda_min(pd, opts.acyclic_tol) / 4
    reg = _regularize(pd, _t_kernel(r), rate, opts)
    form = Form(pd.ctx, reg.value)
    return (form, reg) if details else form


def torsion_T_tilde(point, r: float = 0.0, x=None, opts: TorsionOptions | None = None, details=False):
    """``T~_r``; the weight ``t^s dt`` is rewritten as ``t^{s-1} (t F) dt``."""
    opts = opts or TorsionOptions()
    pd = _as_pd(point, x)
    rate = (1 + r * r) * _lambda_min(pd, opts.acyclic_tol)
    reg = _regularize(pd, _tilde_kernel(r, True), rate, opts)
    form = Form(pd.ctx, reg.value)
    return (form, reg) if details else form


def bl_torsion(point, x=None, opts: TorsionOptions | None = None, details=False):
    """Finite-dimensional analogue of the Bismut-Lott torsion form.

    The measure ``du/(2u)`` is half the regularized ``du/u`` integral; the
    integrand vanishes at ``u = 0`` so the regularization only adds fit noise.
    """
    opts = opts or TorsionOptions()
    pd = _as_pd(point, x)
    rate = min(_lambda_min(pd, opts.acyclic_tol), 1.0) / 4
    reg = _regularize(pd, _bl_kernel, rate, opts, scale=0.5)
    form = Form(pd.ctx, reg.value)
    return (form, reg) if details else form


# ---------------------------------------------------------------------------
# closed forms


def degree0_T(spec: FlatComplexSpec, r: float) -> float:
    """``{T_r}^{[0]} = str[N] / (1 + r^2)`` for any acyclic complex."""
    return spec.str_number / (1 + r * r)


def degree0_bl(pd: PointData) -> np.ndarray:
    """``(1/2) sum_i (-1)^i i log det Delta_i`` from eigenvalues of ``Delta = (v + v*)^2``."""
    lap = pd.laplacian()
    out = np.zeros(pd.shape)
    for i in range(len(pd.space.ranks)):
        if pd.space.ranks[i] == 0 or i == 0:
            continue
        blk = pd.space.block(i)
        lam = np.linalg.eigvals(lap[..., blk, blk])
        out = out + 0.5 * (-1) ** i * i * np.log(lam).sum(axis=-1).real
    return out


# ---------------------------------------------------------------------------
# comparison identities


def _str_number_d_exp(pd: PointData, t, r, scaled: bool):
    """``str[N D e^{(1+r^2) D^2}]`` (no phi) with ``D = D_{4t}`` or ``D_t``."""
    D = d_4t(pd, t) if scaled else d_u(pd, t)
    E = superexp(smul(D, D) * (1 + r * r))
    N = _expand_pd(pd, np.atleast_1d(np.asarray(t, float)))
    return supertrace(smul(N, smul(D, E))).coeffs[0]


def check_dmz6(spec: FlatComplexSpec, x, t: float, r: float, n: int = 48, form: str = "scaled"):
    """Residual of the pointwise transgression identity at ``x``.

    ``form="scaled"`` checks (everything without phi)

        -str[t^{-1/2} D_{4t} W e^{(1+r^2) D_{4t}^2}]
            = -(2/t) str[N D_{4t}^2 e^{...}] + (i r / t) d str[N D_{4t} e^{...}],

    ``form="same_t"`` uses ``D_t`` throughout with ``W/2 = d/d sqrt(t) (C_t + i r D_t)``.
    ``form="literal"`` keeps ``D_{4t}`` on the left but ``D_t`` on the right; the
    two time scales do not match and the residual is O(1) (kept for the record).
    Returns ``(residual, lhs_norm)``.
    """
    if form not in ("scaled", "same_t", "literal"):
        raise ValueError("form must be 'scaled', 'same_t' or 'literal'")
    scaled = form != "same_t"
    rscaled = form == "scaled"
    x = np.asarray(x, float)
    pd = point_data(spec, x)
    tt = np.array([t], float)
    D = d_4t(pd, tt) if scaled else d_u(pd, tt)
    D2 = smul(D, D)
    E = superexp(D2 * (1 + r * r))
    W = _w_element(pd, r) * (1.0 if scaled else 0.5)
    lhs = -supertrace(smul(D, smul(W, E))).coeffs[0] / np.sqrt(t)
    if rscaled != scaled:
        D = d_u(pd, tt)
        D2 = smul(D, D)
        E = superexp(D2 * (1 + r * r))
    N = _expand_pd(pd, tt)
    first = -(2 / t) * supertrace(smul(N, smul(D2, E))).coeffs[0]
    dterm = exterior_derivative(
        lambda pts: _str_number_d_exp(point_data(spec, pts), tt, r, rscaled),
        x,
        spec.ctx,
        spec.periods,
        mono_axis=-1,
        n=n,
    )
    rhs = first + (1j * r / t) * dterm
    return float(np.abs(lhs - rhs).max()), float(np.abs(lhs).max())


@dataclass
class Dmz7Result:
    lhs: np.ndarray  # {T_r}^{[i]} components
    rhs: np.ndarray  # factor * {T}^{[i]}
    factor: float
    ratio: np.ndarray  # lhs / {T}^{[i]}
    vacuous: bool

    @property
    def error(self) -> float:
        return float(np.abs(self.lhs - self.rhs).max())


def check_dmz7(point, r: float, i: int, x=None, opts: TorsionOptions | None = None, floor=1e-12):
    """Compare ``{T_r}^{[i]}`` with ``(i/(i+1)) (1+r^2)^{i/2-1} {T}^{[i]}``."""
    pd = _as_pd(point, x)
    if i <= 0 or i % 2 or i > pd.ctx.p:
        raise ValueError("i must be even with 0 < i <= p")
    Tr = torsion_T(pd, r, opts=opts)
    Tbl = bl_torsion(pd, opts=opts)
    sel = pd.ctx.degrees == i
    a = Tr.coeffs[..., sel]
    b = Tbl.coeffs[..., sel]
    factor = i / (i + 1) * (1 + r * r) ** (i / 2 - 1)
    vac = bool(np.abs(a).max() < floor and np.abs(b).max() < floor)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(np.abs(b) > floor, a / b, np.nan)
    return Dmz7Result(a, factor * b, factor, ratio, vac)


# ---------------------------------------------------------------------------
# base integrals and reports


def integrate_T_field(spec: FlatComplexSpec, r: float, n: int = 24, opts=None, which="T"):
    """``int_{T^p}`` of the top-degree part of ``T_r`` (or ``T~_r``) on an ``n^p`` grid."""
    fn = {"T": torsion_T, "T_tilde": torsion_T_tilde}[which]
    pts = sample_grid(spec, n).reshape(-1, spec.p)
    vals = fn(point_data(spec, pts), r, opts=opts)
    top = vals.coeffs[..., spec.ctx.top]
    return complex(top.mean() * spec.volume)


def _form_to_json(f: Form):
    c = np.asarray(f.coeffs)
    out = {}
    for m, lab in enumerate(f.ctx.labels):
        z = c[..., m]
        out[lab] = np.stack([z.real, z.imag], axis=-1).tolist()
    return out


@dataclass
class TorsionReport:
    """Pointwise torsion forms at a batch of base points with diagnostics."""

    r: float
    x: np.ndarray
    T: Form
    T_tilde: Form
    bl: Form
    diagnostics: dict = field(default_factory=dict)

    def degree(self, which: str, i: int):
        f = {"T": self.T, "T_tilde": self.T_tilde, "bl": self.bl}[which]
        return f.coeffs[..., f.ctx.degrees == i]

    def to_dict(self):
        return {
            "r": self.r,
            "x": np.asarray(self.x).tolist(),
            "T": _form_to_json(self.T),
            "T_tilde": _form_to_json(self.T_tilde),
            "bl": _form_to_json(self.bl),
            "diagnostics": self.diagnostics,
        }


def _diag(reg: RegularizedIntegral):
    d = reg.diagnostics()
    d["fit_singular_norm"] = reg.fit.singular_norm(-1.0)
    return d


def torsion_report(spec: FlatComplexSpec, x, r: float, opts: TorsionOptions | None = None):
    pd = point_data(spec, np.asarray(x, float))
    T, rT = torsion_T(pd, r, opts=opts, details=True)
    Tt, rTt = torsion_T_tilde(pd, r, opts=opts, details=True)
    B, rB = bl_torsion(pd, opts=opts, details=True)
    diag = {"T": _diag(rT), "T_tilde": _diag(rTt), "bl": _diag(rB)}
    return TorsionReport(r, np.asarray(x, float), T, T_tilde=Tt, bl=B, diagnostics=diag)
