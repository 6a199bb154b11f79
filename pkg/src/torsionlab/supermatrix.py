"""Form-valued endomorphisms of a Z-graded vector space.

A :class:`SuperElement` is an element of ``Lambda(p) (x) End(E)`` with the
graded (Koszul) product

    (a (x) M)(b (x) N) = (-1)^{|M| |b|} (a ^ b) (x) (M N).

Entries are stored as an array of shape ``(..., 2**p, R, R)``: one ``R x R``
matrix per exterior monomial, with optional leading batch axes.  The Koszul
sign never needs an explicit parity split: when the right factor has odd form
degree, the left matrix is replaced by ``eps M eps`` with ``eps = (-1)^N``,
which flips the sign of its odd (off-diagonal-block) part.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .exterior import Form, FormContext

__all__ = [
    "GradedSpace",
    "SuperElement",
    "smul",
    "supertrace",
    "supercommutator",
    "superexp",
    "superexp_taylor",
    "ParityError",
]


class ParityError(ValueError):
    """Raised when an operation requires a homogeneous element of given parity."""


@dataclass(frozen=True)
class GradedSpace:
    """``E = E^0 + ... + E^n`` with complex ranks ``ranks[i]``."""

    ranks: tuple[int, ...]

    def __post_init__(self):
        r = tuple(int(x) for x in self.ranks)
        if len(r) < 2:
            raise ValueError("a graded space needs at least two degrees (n >= 1)")
        if any(x < 0 for x in r) or sum(r) < 1:
            raise ValueError(f"invalid ranks {r}")
        object.__setattr__(self, "ranks", r)

    @property
    def n(self) -> int:
        return len(self.ranks) - 1

    @property
    def dim(self) -> int:
        return sum(self.ranks)

    @functools.cached_property
    def offsets(self) -> tuple[int, ...]:
        return tuple(int(x) for x in np.concatenate([[0], np.cumsum(self.ranks)]))

    def block(self, i: int) -> slice:
        return slice(self.offsets[i], self.offsets[i + 1])

    @functools.cached_property
    def degree_vector(self) -> np.ndarray:
        """E-degree of each basis vector."""
        return np.repeat(np.arange(len(self.ranks)), self.ranks)

    @functools.cached_property
    def number_operator(self) -> np.ndarray:
        return np.diag(self.degree_vector.astype(float))

    @functools.cached_property
    def epsilon(self) -> np.ndarray:
        """Diagonal of the grading ``(-1)^N``."""
        return np.where(self.degree_vector % 2, -1.0, 1.0)

    @functools.cached_property
    def parity_mask(self) -> np.ndarray:
        """``R x R`` array of E-parities ``(i - j) mod 2`` of matrix entries."""
        d = self.degree_vector
        return (d[:, None] - d[None, :]) % 2

    def zero_matrix(self) -> np.ndarray:
        return np.zeros((self.dim, self.dim), dtype=complex)


@dataclass(frozen=True, eq=False)
class SuperElement:
    """Element of ``Lambda(p) (x) End(E)`` (possibly batched)."""

    ctx: FormContext
    space: GradedSpace
    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=complex)
        R = self.space.dim
        if e.shape[-3:] != (self.ctx.dim, R, R):
            raise ValueError(
                f"entries must end in ({self.ctx.dim}, {R}, {R}), got {e.shape}"
            )
        object.__setattr__(self, "entries", e)

    # constructors -----------------------------------------------------
    @classmethod
    def zeros(cls, ctx, space, shape=()):
        return cls(ctx, space, np.zeros(tuple(shape) + (ctx.dim, space.dim, space.dim), complex))

    @classmethod
    def identity(cls, ctx, space):
        return cls.from_matrix(ctx, space, np.eye(space.dim))

    @classmethod
    def from_matrix(cls, ctx, space, m, mask=0):
        """``dx^mask (x) m`` for an ``R x R`` (or batched) matrix ``m``."""
        m = np.asarray(m, dtype=complex)
        out = np.zeros(m.shape[:-2] + (ctx.dim, space.dim, space.dim), complex)
        out[..., mask, :, :] = m
        return cls(ctx, space, out)

    @classmethod
    def one_form(cls, ctx, space, mats):
        """``sum_a dx^a (x) mats[a]`` from a sequence of ``p`` matrices (index 0 = dx^1)."""
        mats = [np.asarray(m, dtype=complex) for m in mats]
        if len(mats) != ctx.p:
            raise ValueError(f"need {ctx.p} matrices, got {len(mats)}")
        out = np.zeros(mats[0].shape[:-2] + (ctx.dim, space.dim, space.dim), complex)
        for a, m in enumerate(mats):
            out[..., 1 << a, :, :] = m
        return cls(ctx, space, out)

    @classmethod
    def from_form(cls, form: Form, space, matrix=None):
        """``form (x) matrix`` (identity by default)."""
        m = np.eye(space.dim) if matrix is None else np.asarray(matrix, complex)
        return cls(form.ctx, space, form.coeffs[..., :, None, None] * m)

    # arithmetic ---------------------------------------------------------
    def _like(self, entries):
        return SuperElement(self.ctx, self.space, entries)

    def _check(self, other):
        if not isinstance(other, SuperElement):
            raise TypeError(f"expected SuperElement, got {type(other).__name__}")
        if other.ctx != self.ctx or other.space != self.space:
            raise ValueError("graded space or form context mismatch")

    def __add__(self, other):
        self._check(other)
        return self._like(self.entries + other.entries)

    def __sub__(self, other):
        self._check(other)
        return self._like(self.entries - other.entries)

    def __neg__(self):
        return self._like(-self.entries)

    def __mul__(self, c):
        if isinstance(c, SuperElement):
            return smul(self, c)
        return self._like(self.entries * np.asarray(c)[..., None, None, None])

    def __rmul__(self, c):
        return self._like(self.entries * np.asarray(c)[..., None, None, None])

    def __matmul__(self, other):
        return smul(self, other)

    @property
    def shape(self):
        return self.entries.shape[:-3]

    def form_part(self, i: int) -> "SuperElement":
        keep = (self.ctx.degrees == i)[:, None, None]
        return self._like(self.entries * keep)

    def matrix(self, mask=0) -> np.ndarray:
        return self.entries[..., mask, :, :]

    def norm(self) -> float:
        """Largest operator 2-norm among the monomial coefficient matrices."""
        if self.entries.size == 0:
            return 0.0
        return float(np.max(np.linalg.norm(self.entries, ord=2, axis=(-2, -1))))

    @functools.cached_property
    def _parity_weights(self):
        # weight 0 for entries whose total parity is even, 1 for odd
        form_par = (self.ctx.degrees % 2)[:, None, None]
        return (form_par + self.space.parity_mask[None, :, :]) % 2

    def parity(self, tol=1e-12):
        """Total Z2 parity (0 or 1) if homogeneous, else ``None``."""
        mag = np.abs(self.entries)
        scale = max(float(mag.max()) if mag.size else 0.0, 1.0)
        odd = mag * self._parity_weights
        even = mag * (1 - self._parity_weights)
        has_odd = odd.max(initial=0.0) > tol * scale
        has_even = even.max(initial=0.0) > tol * scale
        if has_odd and has_even:
            return None
        return 1 if has_odd else 0

    def even_part(self):
        return self._like(self.entries * (1 - self._parity_weights))

    def odd_part(self):
        return self._like(self.entries * self._parity_weights)

    def adjoint_matrix(self):
        """Entrywise conjugate transpose of each coefficient matrix (forms untouched)."""
        return self._like(np.conj(np.swapaxes(self.entries, -1, -2)))

    def allclose(self, other, atol=1e-12):
        self._check(other)
        return bool(np.allclose(self.entries, other.entries, atol=atol, rtol=0))


def smul(A: SuperElement, B: SuperElement) -> SuperElement:
    """Graded product ``A B`` in ``Lambda (x) End(E)`` with Koszul signs."""
    A._check(B)
    left, right, out, sign = A.ctx.product_table()
    eps = A.space.epsilon
    a = A.entries
    a_twisted = a * eps[:, None] * eps[None, :]
    odd_right = A.ctx.degrees[right] % 2 == 1
    shape = np.broadcast_shapes(A.shape, B.shape)
    res = np.zeros(shape + (A.ctx.dim, A.space.dim, A.space.dim), complex)
    for li, ri, oi, s, tw in zip(left, right, out, sign, odd_right):
        lhs = a_twisted[..., li, :, :] if tw else a[..., li, :, :]
        res[..., oi, :, :] += s * (lhs @ B.entries[..., ri, :, :])
    return SuperElement(A.ctx, A.space, res)


def supertrace(A: SuperElement) -> Form:
    """``sum_i (-1)^i tr(A|_{E^i})`` as a (batched) form."""
    eps = A.space.epsilon
    diag = np.diagonal(A.entries, axis1=-2, axis2=-1)
    return Form(A.ctx, (diag * eps).sum(axis=-1))


def supercommutator(A: SuperElement, B: SuperElement) -> SuperElement:
    """Graded commutator ``[A, B] = AB - (-1)^{|A||B|} BA``.

    Non-homogeneous arguments are split into even and odd parts and the
    bracket is extended bilinearly.
    """
    pa, pb = A.parity(), B.parity()
    if pa is None or pb is None:
        out = SuperElement.zeros(A.ctx, A.space, np.broadcast_shapes(A.shape, B.shape))
        for a in (A.even_part(), A.odd_part()):
            for b in (B.even_part(), B.odd_part()):
                out = out + supercommutator(a, b)
        return out
    s = -1.0 if (pa and pb) else 1.0
    return smul(A, B) - s * smul(B, A)


def _identity_like(A: SuperElement) -> SuperElement:
    eye = np.zeros(A.entries.shape, complex)
    eye[..., 0, :, :] = np.eye(A.space.dim)
    return A._like(eye)


def superexp(A: SuperElement, order: int = 18, target: float = 0.5) -> SuperElement:
    """Exponential of an even element by scaling and squaring.

    The Taylor kernel is evaluated on ``A / 2**s`` with ``s`` chosen so that the
    scaled norm is below ``target``, then squared ``s`` times.  The algebra is
    finite-dimensional and associative, so this is the ordinary matrix-exponential
    algorithm carried out with :func:`smul`.
    """
    if A.parity() == 1 or A.parity() is None:
        raise ParityError("superexp requires an even element")
    nrm = A.norm()
    s = 0 if nrm <= target else int(np.ceil(np.log2(nrm / target)))
    X = A * (0.5**s)
    term = _identity_like(A)
    out = term
    for k in range(1, order + 1):
        term = smul(term, X) * (1.0 / k)
        out = out + term
    for _ in range(s):
        out = smul(out, out)
    return out


def superexp_taylor(A: SuperElement, terms: int = 60) -> SuperElement:
    """Plain Taylor series ``sum_k A^k / k!`` with no scaling (test oracle)."""
    term = _identity_like(A)
    out = term
    for k in range(1, terms):
        term = smul(term, A) * (1.0 / k)
        out = out + term
    return out
