"""Canonical test complexes.

The same objects are shipped as JSON in ``torsionlab/data`` (see
:func:`write_bundled`), which is the format the command line reads.
"""
from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .flat_complex import FlatComplexSpec, TrigPolyField, dump_spec, load_spec
from .supermatrix import GradedSpace

__all__ = [
    "rank11",
    "rank22",
    "const22",
    "gauge22",
    "rank22_p4",
    "indefinite11",
    "bundled_path",
    "load_bundled",
    "write_bundled",
]

SX = np.array([[0, 1], [1, 0]], complex)
SY = np.array([[0, -1j], [1j, 0]], complex)
SZ = np.array([[1, 0], [0, -1]], complex)
I2 = np.eye(2, dtype=complex)


def _cos(k, m):
    """Terms of ``m cos(k.x)`` as a dict ``{k: m/2, -k: m^dagger/2}``-style helper."""
    k = tuple(k)
    mk = tuple(-t for t in k)
    return {k: 0.5 * m, mk: 0.5 * np.conj(m.T)}


def _sin(k, m):
    k = tuple(k)
    mk = tuple(-t for t in k)
    return {k: -0.5j * m, mk: 0.5j * np.conj(m.T)}


def _accumulate(*parts):
    out = {}
    for d in parts:
        for k, m in d.items():
            out[k] = out.get(k, 0) + m
    return out


def _block_diag(a, b):
    a, b = np.atleast_2d(a), np.atleast_2d(b)
    out = np.zeros((a.shape[0] + b.shape[0],) * 2, complex)
    out[: a.shape[0], : a.shape[0]] = a
    out[a.shape[0]:, a.shape[0]:] = b
    return out


def _diag_field(terms0: dict, terms1: dict, p: int) -> TrigPolyField:
    keys = set(terms0) | set(terms1)
    r0 = next(iter(terms0.values())).shape[0]
    r1 = next(iter(terms1.values())).shape[0]
    z0, z1 = np.zeros((r0, r0)), np.zeros((r1, r1))
    return TrigPolyField.from_dict(
        {k: _block_diag(terms0.get(k, z0), terms1.get(k, z1)) for k in sorted(keys)}, p
    )


def _v0(r0, r1, block):
    v = np.zeros((r0 + r1, r0 + r1), complex)
    v[r0:, :r0] = block
    return v


def rank11(a=0.3, b=0.2, name="rank11") -> FlatComplexSpec:
    """``E^0 = E^1 = C``, ``v = 1``, ``h = diag(1, e^f)`` with ``e^f = 1 + a cos x1 + b sin x2``."""
    one = np.ones((1, 1))
    h1 = _accumulate({(0, 0): one}, _cos((1, 0), a * one), _sin((0, 1), b * one))
    h = _diag_field({(0, 0): one}, h1, 2)
    return FlatComplexSpec(GradedSpace((1, 1)), _v0(1, 1, one), h, name=name)


def rank22(scale=0.25, a=0.4, b=0.4, c=0.2) -> FlatComplexSpec:
    """``E^0 = E^1 = C^2``, ``v = I``, ``h_0 = I`` and a non-commuting 2x2 metric ``h_1``.

    ``h_1 = scale (I + a cos(x1) sx + b cos(x2) sy + c cos(x1 + x2) sz)``.

    The mixed ``cos(x1 + x2)`` term matters: metrics with
    ``h(-x) = s h(x)^T s`` for a real unitary ``s`` (for instance a
    ``sin(x1 + x2) sz`` term here) have ``int {T_r}^{[2]} = 0`` by symmetry.
    """
    h1 = _accumulate(
        {(0, 0): scale * I2},
        _cos((1, 0), scale * a * SX),
        _cos((0, 1), scale * b * SY),
        _cos((1, 1), scale * c * SZ),
    )
    h = _diag_field({(0, 0): I2}, h1, 2)
    return FlatComplexSpec(GradedSpace((2, 2)), _v0(2, 2, I2), h, name="rank22")


def const22(scale=0.25) -> FlatComplexSpec:
    """Constant-metric rank-(2,2) complex: ``h = diag(I, scale (I + 0.3 sx))``."""
    h = _diag_field({(0, 0): I2}, {(0, 0): scale * (I2 + 0.3 * SX)}, 2)
    return FlatComplexSpec(GradedSpace((2, 2)), _v0(2, 2, I2), h, name="const22")


def gauge22(scale=0.25) -> FlatComplexSpec:
    """:func:`rank22` metric with a non-trivial degree-preserving gauge ``g``."""
    base = rank22(scale)
    g0 = _accumulate({(0, 0): I2}, _cos((1, 0), 0.3 * SX), _sin((0, 1), 0.2 * SZ))
    g1 = _accumulate({(0, 0): I2}, _sin((1, 0), 0.25 * SY), _cos((1, 1), 0.2 * SX))
    g = _diag_field(g0, g1, 2)
    return FlatComplexSpec(base.space, base.v0, base.h, g, name="gauge22")


def rank22_p4(scale=0.25) -> FlatComplexSpec:
    """Rank-(2,2) complex over ``T^4`` with a metric depending on all four angles."""
    e = np.eye(4, dtype=int)
    h1 = _accumulate(
        {(0, 0, 0, 0): scale * I2},
        _cos(e[0], scale * 0.3 * SX),
        _cos(e[1], scale * 0.3 * SY),
        _sin(e[2], scale * 0.25 * SZ),
        _cos(e[3], scale * 0.25 * (SX + SY) / np.sqrt(2)),
    )
    h = _diag_field({(0, 0, 0, 0): I2}, h1, 4)
    return FlatComplexSpec(GradedSpace((2, 2)), _v0(2, 2, I2), h, name="rank22_p4")


def rank33_p4(amplitude=0.35, seed=3) -> FlatComplexSpec:
    """Rank-(3,3) complex over ``T^4`` with a non-vacuous degree-4 torsion part.

    ``h_1 = I + amplitude sum_a cos(x_a) M_a`` with generic Hermitian ``M_a``
    (unit spectral norm, drawn from a fixed seed).  Structured choices such as
    Pauli or Gell-Mann coefficients leave ``{T_r}^{[4]}`` identically zero.
    """
    rng = np.random.default_rng(seed)
    I3 = np.eye(3, dtype=complex)
    e = np.eye(4, dtype=int)
    terms = [{(0, 0, 0, 0): I3}]
    for a in range(4):
        m = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        m = (m + m.conj().T) / 2
        terms.append(_cos(e[a], amplitude * m / np.linalg.norm(m, 2)))
    h = _diag_field({(0, 0, 0, 0): I3}, _accumulate(*terms), 4)
    return FlatComplexSpec(GradedSpace((3, 3)), _v0(3, 3, I3), h, name="rank33_p4")


def indefinite11() -> FlatComplexSpec:
    """Rank-(1,1) spec whose metric ``1 + 1.5 cos x1`` changes sign."""
    return rank11(a=1.5, b=0.0, name="indefinite11")


_BUILDERS = {
    "rank11": rank11,
    "rank22": rank22,
    "const22": const22,
    "gauge22": gauge22,
    "rank22_p4": rank22_p4,
    "rank33_p4": rank33_p4,
    "indefinite11": indefinite11,
}


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("torsionlab") / "data" / f"{name}.json"))


def load_bundled(name: str) -> FlatComplexSpec:
    return load_spec(bundled_path(name))


def write_bundled(directory=None):
    directory = Path(directory) if directory else bundled_path("x").parent
    directory.mkdir(parents=True, exist_ok=True)
    for name, build in _BUILDERS.items():
        dump_spec(build(), directory / f"{name}.json")
