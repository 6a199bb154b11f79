"""Flat cochain complexes over flat tori.

A complex is given by a constant differential ``v0``, a block-diagonal
Hermitian metric ``h(x)`` and an optional block-diagonal gauge ``g(x)``, all
finite Fourier sums.  The flat connection is ``d + g^{-1} dg`` and the
differential is ``v = g^{-1} v0 g``; both flatness conditions then hold by
construction.

All pointwise quantities are vectorized over leading axes of ``x``.
"""
from __future__ import annotations

import functools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .supermatrix import GradedSpace, SuperElement
from .exterior import FormContext

__all__ = [
    "TrigPolyField",
    "FlatComplexSpec",
    "PointData",
    "ValidationReport",
    "SpecError",
    "adjoint_v",
    "omega_form",
    "point_data",
    "validate_flatness",
    "acyclicity_check",
    "sample_grid",
    "spectral_derivative",
    "load_spec",
    "dump_spec",
    "spec_from_dict",
    "spec_to_dict",
    "encode_complex",
    "decode_complex",
]

TWO_PI = 2 * np.pi


class SpecError(ValueError):
    """Invalid complex specification (schema, block structure, positivity)."""


# ---------------------------------------------------------------------------
# trigonometric polynomial fields


@dataclass(frozen=True, eq=False)
class TrigPolyField:
    """Matrix-valued finite Fourier sum ``sum_k c_k exp(i k.x * 2pi/L)``.

    ``wavevectors`` has shape ``(M, p)`` (integers) and ``coeffs`` shape
    ``(M, a, b)``.
    """

    wavevectors: np.ndarray
    coeffs: np.ndarray
    periods: tuple = None

    def __post_init__(self):
        k = np.atleast_2d(np.asarray(self.wavevectors, dtype=int))
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim == 1:
            c = c[:, None, None]
        if k.shape[0] != c.shape[0]:
            raise SpecError("one coefficient matrix per wave vector required")
        p = k.shape[1]
        periods = (TWO_PI,) * p if self.periods is None else tuple(float(x) for x in self.periods)
        if len(periods) != p:
            raise SpecError("periods must match the base dimension")
        object.__setattr__(self, "wavevectors", k)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "periods", periods)

    @property
    def p(self) -> int:
        return self.wavevectors.shape[1]

    @property
    def matrix_shape(self):
        return self.coeffs.shape[1:]

    @property
    def K(self) -> int:
        return int(np.abs(self.wavevectors).max()) if self.wavevectors.size else 0

    @functools.cached_property
    def _freqs(self):
        return self.wavevectors * (TWO_PI / np.asarray(self.periods))

    @classmethod
    def constant(cls, matrix, p: int, periods=None):
        m = np.asarray(matrix, dtype=complex)
        return cls(np.zeros((1, p), int), m[None], periods)

    @classmethod
    def from_dict(cls, terms: dict, p: int, periods=None):
        """Build from ``{k_tuple: matrix}``."""
        ks = np.array([tuple(k) for k in terms], dtype=int).reshape(-1, p)
        cs = np.array([np.asarray(m, complex) for m in terms.values()])
        return cls(ks, cs, periods)

    @classmethod
    def from_samples(cls, values, periods=None, tol=0.0):
        """Interpolating trig polynomial through samples on a uniform grid.

        ``values`` has shape ``(N_1, ..., N_p, a, b)``.  Nyquist modes are split
        symmetrically so real data gives a real interpolant.
        """
        v = np.asarray(values, dtype=complex)
        p = v.ndim - 2
        shape = v.shape[:p]
        c = np.fft.fftn(v, axes=tuple(range(p))) / np.prod(shape)
        ks, cs = [], []
        for idx in np.ndindex(*shape):
            coef = c[idx]
            if tol and np.abs(coef).max() <= tol:
                continue
            # signed frequency; Nyquist split into +-N/2 halves
            options = [[]]
            weight = 1.0
            for n, i in zip(shape, idx):
                kk = i if i < n / 2 else i - n
                if n % 2 == 0 and i == n // 2:
                    options = [o + [s] for o in options for s in (n // 2, -n // 2)]
                    weight *= 0.5
                else:
                    options = [o + [kk] for o in options]
            for o in options:
                ks.append(o)
                cs.append(coef * weight)
        return cls(np.array(ks, int).reshape(-1, p), np.array(cs), periods)

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x, derivative=None):
        """Values at points ``x`` (shape ``(..., p)``); ``derivative`` = axis index or None."""
        x = np.asarray(x, dtype=float)
        phase = np.exp(1j * (x @ self._freqs.T))  # (..., M)
        c = self.coeffs
        if derivative is not None:
            c = c * (1j * self._freqs[:, derivative])[:, None, None]
        return np.einsum("...m,mab->...ab", phase, c)

    def gradient(self, x):
        """Array of shape ``(..., p, a, b)`` of partial derivatives."""
        return np.stack([self.evaluate(x, derivative=a) for a in range(self.p)], axis=-3)

    def hermitian_defect(self) -> float:
        """Max of ``|c(-k) - c(k)^dagger|`` over the table."""
        lookup = {tuple(k): c for k, c in zip(self.wavevectors, self.coeffs)}
        worst = 0.0
        for k, c in lookup.items():
            partner = lookup.get(tuple(-np.asarray(k)))
            ch = np.conj(c.T)
            if partner is None:
                worst = max(worst, float(np.abs(ch).max()))
            else:
                worst = max(worst, float(np.abs(partner - ch).max()))
        return worst


# ---------------------------------------------------------------------------
# complex specification


def _block_structure_defect(m, space: GradedSpace, allowed) -> float:
    d = space.degree_vector
    diff = d[None, :] - d[:, None]  # column degree - row degree (maps col -> row)
    bad = ~np.isin(-diff, allowed)
    return float(np.abs(np.asarray(m)[..., bad]).max(initial=0.0))


@dataclass(frozen=True, eq=False)
class FlatComplexSpec:
    """Flat cochain complex ``(E, v, nabla, h)`` over a flat torus."""

    space: GradedSpace
    v0: np.ndarray
    h: TrigPolyField
    g: TrigPolyField | None = None
    name: str = ""

    def __post_init__(self):
        v0 = np.asarray(self.v0, dtype=complex)
        R = self.space.dim
        if v0.shape != (R, R):
            raise SpecError(f"v0 must be {R}x{R}")
        # v raises degree by exactly one: row degree = column degree + 1
        if _block_structure_defect(v0, self.space, allowed=[1]) > 0:
            raise SpecError("v0 has entries outside the E^i -> E^{i+1} blocks")
        sq = np.abs(v0 @ v0).max()
        if sq > 1e-12 * max(1.0, np.abs(v0).max() ** 2):
            raise SpecError(f"v0 does not square to zero (max |v0^2| = {sq:.3e})")
        if self.h.matrix_shape != (R, R):
            raise SpecError("metric field has the wrong matrix size")
        if _block_structure_defect(self.h.coeffs, self.space, allowed=[0]) > 0:
            raise SpecError("metric must be block diagonal")
        if self.h.hermitian_defect() > 1e-12:
            raise SpecError("metric coefficients violate c(-k) = c(k)^dagger")
        if self.g is not None:
            if self.g.matrix_shape != (R, R) or self.g.p != self.h.p:
                raise SpecError("gauge field has the wrong shape")
            if _block_structure_defect(self.g.coeffs, self.space, allowed=[0]) > 0:
                raise SpecError("gauge must be block diagonal (degree preserving)")
        object.__setattr__(self, "v0", v0)

    @property
    def p(self) -> int:
        return self.h.p

    @property
    def ctx(self) -> FormContext:
        return FormContext(self.p)

    @property
    def periods(self):
        return self.h.periods

    @property
    def volume(self) -> float:
        return float(np.prod(self.periods))

    @property
    def str_number(self) -> float:
        """Supertrace of the number operator, ``sum_i (-1)^i i r_i``."""
        return float(sum((-1) ** i * i * r for i, r in enumerate(self.space.ranks)))

    def with_metric(self, h: TrigPolyField, name=None) -> "FlatComplexSpec":
        return FlatComplexSpec(self.space, self.v0, h, self.g, name or self.name)


def sample_grid(spec_or_p, n: int, periods=None) -> np.ndarray:
    """Uniform grid of shape ``(n, ..., n, p)`` on the torus."""
    if isinstance(spec_or_p, FlatComplexSpec):
        p, periods = spec_or_p.p, spec_or_p.periods
    else:
        p = int(spec_or_p)
        periods = periods or (TWO_PI,) * p
    axes = [np.arange(n) * (L / n) for L in periods]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def spectral_derivative(values, axis: int, period=TWO_PI, p=None):
    """Fourier derivative of samples along grid ``axis`` (Nyquist mode dropped)."""
    v = np.asarray(values, dtype=complex)
    n = v.shape[axis]
    k = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    shape = [1] * v.ndim
    shape[axis] = n
    mult = (1j * k * (TWO_PI / period)).reshape(shape)
    return np.fft.ifft(np.fft.fft(v, axis=axis) * mult, axis=axis)


# ---------------------------------------------------------------------------
# pointwise data


def adjoint_v(v, h):
    """Adjoint ``h^{-1} v^dagger h`` of ``v`` with respect to the metric ``h``.

    For block-diagonal ``h`` this is blockwise ``h_i^{-1} v_i^dagger h_{i+1}``.
    """
    v = np.asarray(v, complex)
    h = np.asarray(h, complex)
    vd = np.conj(np.swapaxes(v, -1, -2))
    try:
        return np.linalg.solve(h, vd @ h)
    except np.linalg.LinAlgError as exc:
        raise SpecError("metric is singular") from exc


def _gauge_data(spec: FlatComplexSpec, x):
    x = np.asarray(x, float)
    R = spec.space.dim
    if spec.g is None:
        v = np.broadcast_to(spec.v0, x.shape[:-1] + (R, R)).copy()
        gamma = np.zeros(x.shape[:-1] + (spec.p, R, R), complex)
        return v, gamma
    gx = spec.g.evaluate(x)
    dg = spec.g.gradient(x)
    ginv = np.linalg.inv(gx)
    gamma = ginv[..., None, :, :] @ dg
    v = ginv @ spec.v0 @ gx
    return v, gamma


def omega_form(spec: FlatComplexSpec, x):
    """Per-axis components ``omega_a = h^{-1}(d_a h - Gamma_a^dagger h - h Gamma_a)``.

    This is ``h^{-1}`` times the covariant derivative of the metric, so that the
    metric-adjoint connection is ``nabla + omega``.  Returns shape ``(..., p, R, R)``.
    """
    _, gamma = _gauge_data(spec, x)
    h = spec.h.evaluate(x)
    dh = spec.h.gradient(x)
    return _omega_from(h, dh, gamma)


def _omega_from(h, dh, gamma):
    gd = np.conj(np.swapaxes(gamma, -1, -2))
    hh = h[..., None, :, :]
    cov = dh - gd @ hh - hh @ gamma
    return np.linalg.solve(hh, cov)


@dataclass(frozen=True, eq=False)
class PointData:
    """Pointwise data of a flat complex at (a batch of) base points."""

    spec: FlatComplexSpec
    x: np.ndarray
    v: np.ndarray
    vstar: np.ndarray
    h: np.ndarray
    gamma: np.ndarray  # (..., p, R, R)
    omega: np.ndarray  # (..., p, R, R)
    dh: np.ndarray = field(repr=False, default=None)

    @property
    def ctx(self):
        return self.spec.ctx

    @property
    def space(self):
        return self.spec.space

    @property
    def shape(self):
        return self.x.shape[:-1]

    def _se0(self, m):
        return SuperElement.from_matrix(self.ctx, self.space, m)

    @property
    def omega_se(self) -> SuperElement:
        return SuperElement.one_form(self.ctx, self.space, np.moveaxis(self.omega, -3, 0))

    @property
    def gamma_se(self) -> SuperElement:
        return SuperElement.one_form(self.ctx, self.space, np.moveaxis(self.gamma, -3, 0))

    @property
    def v_se(self) -> SuperElement:
        return self._se0(self.v)

    @property
    def vstar_se(self) -> SuperElement:
        return self._se0(self.vstar)

    @property
    def number_se(self) -> SuperElement:
        N = np.broadcast_to(self.space.number_operator, self.v.shape)
        return self._se0(N)

    def laplacian(self):
        """``(v + v*)^2`` at each point."""
        s = self.v + self.vstar
        return s @ s

    @functools.cached_property
    def unitary_frame(self) -> "UnitaryFrame":
        return UnitaryFrame.build(self)


def point_data(spec: FlatComplexSpec, x) -> PointData:
    """Bundle ``v, v*, h, Gamma, omega`` at ``x`` (shape ``(..., p)``)."""
    x = np.asarray(x, float)
    if x.shape[-1:] != (spec.p,):
        raise SpecError(f"points must have trailing dimension {spec.p}")
    v, gamma = _gauge_data(spec, x)
    h = spec.h.evaluate(x)
    dh = spec.h.gradient(x)
    vstar = adjoint_v(v, h)
    omega = _omega_from(h, dh, gamma)
    return PointData(spec, x, v, vstar, h, gamma, omega, dh)


@dataclass(frozen=True, eq=False)
class UnitaryFrame:
    """Data in the ``h``-orthonormal frame ``s -> h^{1/2} s``.

    In this frame the Hermitian connection ``nabla + omega/2`` has a
    skew-Hermitian coefficient ``conn``, ``omega`` is Hermitian and the adjoint
    of ``v`` is its conjugate transpose.
    """

    sqrt_h: np.ndarray
    inv_sqrt_h: np.ndarray
    conn: np.ndarray  # (..., p, R, R)
    omega: np.ndarray  # (..., p, R, R)
    v: np.ndarray

    @classmethod
    def build(cls, pd: PointData) -> "UnitaryFrame":
        lam, U = np.linalg.eigh(pd.h)
        if np.any(lam <= 0):
            raise SpecError("metric is not positive definite")
        s = np.sqrt(lam)
        Ud = np.conj(np.swapaxes(U, -1, -2))
        sqrt_h = (U * s[..., None, :]) @ Ud
        inv_sqrt_h = (U / s[..., None, :]) @ Ud
        # derivative of h^{1/2}: Daleckii-Krein divided differences
        dh_eig = Ud[..., None, :, :] @ pd.dh @ U[..., None, :, :]
        denom = s[..., None, :, None] + s[..., None, None, :]
        dsqrt = U[..., None, :, :] @ (dh_eig / denom) @ Ud[..., None, :, :]
        S, Si = sqrt_h[..., None, :, :], inv_sqrt_h[..., None, :, :]
        conn = -dsqrt @ Si + S @ (pd.gamma + 0.5 * pd.omega) @ Si
        omega = S @ pd.omega @ Si
        v = sqrt_h @ pd.v @ inv_sqrt_h
        return cls(sqrt_h, inv_sqrt_h, conn, omega, v)


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    grid_size: int
    curvature_residual: float
    commutation_residual: float
    min_metric_eigenvalue: float
    worst_metric_point: list
    min_gauge_singular_value: float
    tolerance: float

    @property
    def positive(self) -> bool:
        return self.min_metric_eigenvalue > 0 and self.min_gauge_singular_value > 0

    @property
    def flat(self) -> bool:
        return max(self.curvature_residual, self.commutation_residual) <= self.tolerance

    @property
    def passed(self) -> bool:
        return self.positive and self.flat

    def to_dict(self):
        d = dict(self.__dict__)
        d.update(positive=self.positive, flat=self.flat, passed=self.passed)
        return d


def validate_flatness(spec: FlatComplexSpec, n: int = 64, tol: float = 1e-10) -> ValidationReport:
    """Check flatness of ``nabla``, ``[nabla, v] = 0`` and positivity of ``h`` on an ``n^p`` grid.

    Derivatives of the (non-polynomial) connection and differential are taken
    spectrally on the grid.
    """
    if n < 1:
        raise SpecError("grid must be nonempty")
    x = sample_grid(spec, n)
    p = spec.p
    hx = spec.h.evaluate(x)
    lam = np.linalg.eigvalsh(hx)
    flat_idx = np.unravel_index(np.argmin(lam[..., 0]), lam.shape[:-1])
    min_sv = np.inf
    if spec.g is not None:
        min_sv = float(np.linalg.svd(spec.g.evaluate(x), compute_uv=False).min())
    if spec.g is None:
        curv = comm = 0.0
    elif min_sv <= 0:
        curv = comm = np.inf
    else:
        v, gamma = _gauge_data(spec, x)
        scale = max(1.0, float(np.abs(gamma).max()))
        curv = 0.0
        for a in range(p):
            for b in range(a + 1, p):
                da_gb = spectral_derivative(gamma[..., b, :, :], a, spec.periods[a])
                db_ga = spectral_derivative(gamma[..., a, :, :], b, spec.periods[b])
                ga, gb = gamma[..., a, :, :], gamma[..., b, :, :]
                F = da_gb - db_ga + ga @ gb - gb @ ga
                curv = max(curv, float(np.abs(F).max()) / scale)
        comm = 0.0
        for a in range(p):
            dv = spectral_derivative(v, a, spec.periods[a])
            ga = gamma[..., a, :, :]
            comm = max(comm, float(np.abs(dv + ga @ v - v @ ga).max()) / scale)
    return ValidationReport(
        grid_size=n,
        curvature_residual=curv,
        commutation_residual=comm,
        min_metric_eigenvalue=float(lam[..., 0].min()),
        worst_metric_point=[float(c) for c in x[flat_idx]],
        min_gauge_singular_value=float(min_sv),
        tolerance=tol,
    )


def acyclicity_check(spec: FlatComplexSpec, n: int = 64) -> float:
    """Minimum over an ``n^p`` grid of the smallest eigenvalue of ``(v + v*)^2``.

    A positive value certifies pointwise acyclicity with a spectral gap.
    """
    pd = point_data(spec, sample_grid(spec, n))
    uf = pd.unitary_frame
    s = uf.v + np.conj(np.swapaxes(uf.v, -1, -2))
    lam = np.linalg.eigvalsh(s @ s)
    return float(lam.min())


# ---------------------------------------------------------------------------
# JSON serialization


def encode_complex(a):
    """Nested lists with each complex scalar as ``[re, im]``."""
    a = np.asarray(a, complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def decode_complex(obj):
    """Inverse of :func:`encode_complex` (trailing axis of length 2 = ``[re, im]``)."""
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"malformed complex array: {exc}") from exc
    if arr.ndim == 0 or arr.shape[-1] != 2:
        raise SpecError("complex scalars must be serialized as [re, im]")
    return arr[..., 0] + 1j * arr[..., 1]


def _field_to_dict(f: TrigPolyField):
    return {
        "K": f.K,
        "coeffs": [
            {"k": [int(t) for t in k], "matrix": encode_complex(c)}
            for k, c in zip(f.wavevectors, f.coeffs)
        ],
    }


def _field_from_dict(d, p, periods):
    try:
        terms = d["coeffs"]
        ks = np.array([t["k"] for t in terms], dtype=int).reshape(-1, p)
        cs = np.array([decode_complex(t["matrix"]) for t in terms])
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"malformed field: {exc}") from exc
    if "K" in d and ks.size and np.abs(ks).max() > int(d["K"]):
        raise SpecError("wave vector exceeds declared cutoff K")
    return TrigPolyField(ks, cs, periods)


def spec_to_dict(spec: FlatComplexSpec) -> dict:
    ranks = spec.space.ranks
    blocks = []
    for i in range(len(ranks) - 1):
        blocks.append(encode_complex(spec.v0[spec.space.block(i + 1), spec.space.block(i)]))
    return {
        "name": spec.name,
        "ranks": list(ranks),
        "v0": blocks,
        "h": _field_to_dict(spec.h),
        "g": None if spec.g is None else _field_to_dict(spec.g),
        "periods": list(spec.periods),
    }


def spec_from_dict(d: dict) -> FlatComplexSpec:
    try:
        space = GradedSpace(tuple(d["ranks"]))
        periods = d.get("periods")
        terms = d["h"]["coeffs"]
        p = len(periods) if periods else len(terms[0]["k"])
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise SpecError(f"malformed spec: {exc}") from exc
    R = space.dim
    v0 = np.zeros((R, R), complex)
    blocks = d.get("v0", [])
    if len(blocks) != space.n:
        raise SpecError(f"expected {space.n} differential blocks, got {len(blocks)}")
    for i, blk in enumerate(blocks):
        b = np.asarray(decode_complex(blk), complex).reshape(space.ranks[i + 1], space.ranks[i])
        v0[space.block(i + 1), space.block(i)] = b
    h = _field_from_dict(d["h"], p, periods)
    g = _field_from_dict(d["g"], p, periods) if d.get("g") else None
    return FlatComplexSpec(space, v0, h, g, name=d.get("name", ""))


def load_spec(path) -> FlatComplexSpec:
    with open(path) as fh:
        return spec_from_dict(json.load(fh))


def dump_spec(spec: FlatComplexSpec, path):
    Path(path).write_text(json.dumps(spec_to_dict(spec), indent=1))
