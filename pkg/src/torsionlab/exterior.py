"""Complex exterior algebra on ``p`` anticommuting generators.

A basis monomial ``dx^{i_1} ^ ... ^ dx^{i_k}`` (ascending indices) is encoded
by the bitmask ``sum(1 << (i - 1))``.  A :class:`Form` stores one complex
coefficient per bitmask in the last axis of an array, so leading axes can be
used for batches (grid points, time samples, ...).
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

__all__ = [
    "FormContext",
    "Form",
    "wedge",
    "phi_normalize",
    "phi_factors",
    "component",
    "degree_of",
    "merge_sign",
    "DEFAULT_ROOT_OF_I",
]

#: Default choice of the square root of ``sqrt(-1)`` used by the
#: normalization map.  Only odd-degree coefficients depend on it.
DEFAULT_ROOT_OF_I = np.exp(1j * np.pi / 4)


def degree_of(mask: int) -> int:
    return bin(mask).count("1")


def merge_sign(a: int, b: int) -> int:
    """Sign of reordering ``e_a ^ e_b`` into ascending order (0 if they overlap)."""
    if a & b:
        return 0
    swaps = 0
    bb = b
    while bb:
        low = bb & -bb
        # generators of ``a`` above this generator of ``b`` must be passed
        swaps += degree_of(a & ~((low << 1) - 1))
        bb ^= low
    return -1 if swaps % 2 else 1


@functools.lru_cache(maxsize=None)
def _product_table(p: int):
    n = 1 << p
    left, right, out, sign = [], [], [], []
    for a in range(n):
        for b in range(n):
            s = merge_sign(a, b)
            if s:
                left.append(a)
                right.append(b)
                out.append(a | b)
                sign.append(s)
    return (np.array(left), np.array(right), np.array(out), np.array(sign, dtype=float))


@dataclass(frozen=True)
class FormContext:
    """Exterior algebra on generators ``dx^1 .. dx^p``."""

    p: int

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise ValueError(f"generator count must be a positive integer, got {self.p!r}")

    @property
    def dim(self) -> int:
        return 1 << self.p

    @property
    def top(self) -> int:
        return self.dim - 1

    @functools.cached_property
    def degrees(self) -> np.ndarray:
        return np.array([degree_of(m) for m in range(self.dim)])

    @property
    def labels(self) -> list[str]:
        out = []
        for m in range(self.dim):
            idx = [str(i + 1) for i in range(self.p) if m >> i & 1]
            out.append("^".join(f"dx{i}" for i in idx) if idx else "1")
        return out

    def product_table(self):
        """Arrays ``(left, right, out, sign)`` over all non-overlapping monomial pairs."""
        return _product_table(self.p)

    def mask(self, *generators: int) -> int:
        """Bitmask for a monomial given 1-based generator indices in ascending order."""
        m = 0
        for g in generators:
            if not 1 <= g <= self.p:
                raise ValueError(f"generator {g} outside 1..{self.p}")
            m |= 1 << (g - 1)
        return m

    # constructors -----------------------------------------------------
    def scalar(self, c=1.0) -> "Form":
        coeffs = np.zeros(self.dim, dtype=complex)
        coeffs[0] = c
        return Form(self, coeffs)

    def zero(self, shape=()) -> "Form":
        return Form(self, np.zeros(tuple(shape) + (self.dim,), dtype=complex))

    def monomial(self, *generators: int, coeff=1.0) -> "Form":
        """``coeff * dx^{g1} ^ dx^{g2} ^ ...`` in the given order (sign included)."""
        out = self.scalar(coeff)
        for g in generators:
            out = out ^ self.generator(g)
        return out

    def generator(self, g: int) -> "Form":
        coeffs = np.zeros(self.dim, dtype=complex)
        coeffs[self.mask(g)] = 1.0
        return Form(self, coeffs)

    def random(self, rng: np.random.Generator, shape=(), degrees=None) -> "Form":
        c = rng.standard_normal(tuple(shape) + (self.dim,)) + 1j * rng.standard_normal(
            tuple(shape) + (self.dim,)
        )
        if degrees is not None:
            keep = np.isin(self.degrees, list(degrees))
            c = c * keep
        return Form(self, c)


@dataclass(frozen=True, eq=False)
class Form:
    """Element of the complex exterior algebra, possibly batched over leading axes."""

    ctx: FormContext
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape[-1:] != (self.ctx.dim,):
            raise ValueError(f"coefficient array must end in {self.ctx.dim}, got shape {c.shape}")
        object.__setattr__(self, "coeffs", c)

    @property
    def shape(self):
        return self.coeffs.shape[:-1]

    def __getitem__(self, mask):
        return self.coeffs[..., mask]

    def _check(self, other: "Form"):
        if not isinstance(other, Form):
            return NotImplemented
        if other.ctx != self.ctx:
            raise ValueError(f"context mismatch: p={self.ctx.p} vs p={other.ctx.p}")
        return None

    def __add__(self, other):
        if np.isscalar(other):
            return self + self.ctx.scalar(other)
        self._check(other)
        return Form(self.ctx, self.coeffs + other.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1) * other

    def __rsub__(self, other):
        return (-1) * self + other

    def __neg__(self):
        return Form(self.ctx, -self.coeffs)

    def __mul__(self, c):
        if isinstance(c, Form):
            return wedge(self, c)
        return Form(self.ctx, self.coeffs * np.asarray(c)[..., None])

    __rmul__ = __mul__

    def __xor__(self, other):
        return wedge(self, other)

    def __repr__(self):
        if self.shape:
            return f"Form(p={self.ctx.p}, batch={self.shape})"
        terms = [
            f"({c:.6g})*{lab}" for c, lab in zip(self.coeffs, self.ctx.labels) if c != 0
        ]
        return " + ".join(terms) if terms else "0"

    def allclose(self, other: "Form", atol=1e-12, rtol=0.0) -> bool:
        self._check(other)
        return bool(np.allclose(self.coeffs, other.coeffs, atol=atol, rtol=rtol))

    def norm(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def degree_part(self, i: int) -> "Form":
        return component(self, i)

    def is_homogeneous(self, tol=0.0):
        present = np.any(np.abs(self.coeffs.reshape(-1, self.ctx.dim)) > tol, axis=0)
        degs = set(self.ctx.degrees[present])
        return len(degs) <= 1


def wedge(a: Form, b: Form) -> Form:
    """Exterior product ``a ^ b`` (batched over matching leading axes)."""
    a._check(b)
    left, right, out, sign = a.ctx.product_table()
    prod = a.coeffs[..., left] * b.coeffs[..., right] * sign
    res = np.zeros(np.broadcast_shapes(a.shape, b.shape) + (a.ctx.dim,), dtype=complex)
    for k in range(a.ctx.dim):
        sel = out == k
        res[..., k] = prod[..., sel].sum(axis=-1)
    return Form(a.ctx, res)


def phi_factors(ctx: FormContext, root_of_i=DEFAULT_ROOT_OF_I) -> np.ndarray:
    """Per-monomial factor ``(2 pi sqrt(-1))^{-deg/2}``.

    ``root_of_i`` is the chosen square root of ``sqrt(-1)``; even degrees do not
    depend on it.
    """
    root_of_i = complex(root_of_i)
    if abs(root_of_i**2 - 1j) > 1e-12:
        raise ValueError("root_of_i must square to 1j")
    half = 1.0 / (np.sqrt(2 * np.pi) * root_of_i)  # (2 pi i)^{-1/2}
    return np.array([half**d for d in ctx.degrees])


def phi_normalize(a: Form, root_of_i=DEFAULT_ROOT_OF_I) -> Form:
    """Scale the degree-``i`` part of ``a`` by ``(2 pi sqrt(-1))^{-i/2}``."""
    return Form(a.ctx, a.coeffs * phi_factors(a.ctx, root_of_i))


def component(a: Form, i: int) -> Form:
    """Degree-``i`` part of ``a``."""
    if not 0 <= i <= a.ctx.p:
        raise ValueError(f"degree {i} outside 0..{a.ctx.p}")
    return Form(a.ctx, a.coeffs * (a.ctx.degrees == i))
