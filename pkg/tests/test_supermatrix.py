import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torsionlab.exterior import FormContext
from torsionlab.supermatrix import (
    GradedSpace,
    ParityError,
    SuperElement,
    smul,
    supercommutator,
    superexp,
    superexp_taylor,
    supertrace,
)

ranks = st.lists(st.integers(1, 3), min_size=2, max_size=3)
seeds = st.integers(0, 2**32 - 1)


def random_homogeneous(ctx, space, rng, parity, scale=1.0):
    e = rng.standard_normal((ctx.dim, space.dim, space.dim)) + 1j * rng.standard_normal(
        (ctx.dim, space.dim, space.dim)
    )
    A = SuperElement(ctx, space, scale * e)
    return A.even_part() if parity == 0 else A.odd_part()


def test_graded_space_basics():
    s = GradedSpace((1, 2, 1))
    assert s.dim == 4 and s.n == 2
    assert list(s.epsilon) == [1, -1, -1, 1]
    assert np.allclose(np.diag(s.number_operator), [0, 1, 1, 2])
    with pytest.raises(ValueError):
        GradedSpace((2,))


def test_koszul_sign():
    ctx, sp = FormContext(2), GradedSpace((1, 1))
    v = np.array([[0, 0], [1, 0]], complex)
    V = SuperElement.from_matrix(ctx, sp, v)
    dx = SuperElement.from_matrix(ctx, sp, np.eye(2), mask=1)
    # v is odd, dx is odd: V dx = -dx V as elements, both equal to -+ dx (x) v
    assert smul(V, dx).allclose(-smul(dx, V))
    assert np.allclose(smul(dx, V).matrix(1), v)


@settings(max_examples=30, deadline=None)
@given(ranks, seeds, st.integers(0, 1), st.integers(0, 1))
def test_supertrace_kills_supercommutators(rk, seed, pa, pb):
    rng = np.random.default_rng(seed)
    ctx, sp = FormContext(2), GradedSpace(tuple(rk))
    A = random_homogeneous(ctx, sp, rng, pa)
    B = random_homogeneous(ctx, sp, rng, pb)
    s = supertrace(supercommutator(A, B))
    assert s.norm() <= 1e-12 * max(A.norm() * B.norm(), 1.0)


def test_supercommutator_graded_antisymmetry(rng):
    ctx, sp = FormContext(2), GradedSpace((2, 1))
    A = random_homogeneous(ctx, sp, rng, 1)
    B = random_homogeneous(ctx, sp, rng, 1)
    assert supercommutator(A, B).allclose(supercommutator(B, A), atol=1e-12)
    C = random_homogeneous(ctx, sp, rng, 0)
    assert supercommutator(A, C).allclose(-supercommutator(C, A), atol=1e-12)


def test_associativity(rng):
    ctx, sp = FormContext(3), GradedSpace((1, 2))
    A, B, C = (SuperElement(ctx, sp, rng.standard_normal((8, 3, 3))) for _ in range(3))
    assert smul(smul(A, B), C).allclose(smul(A, smul(B, C)), atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(ranks, seeds)
def test_superexp_matches_taylor(rk, seed):
    rng = np.random.default_rng(seed)
    ctx, sp = FormContext(2), GradedSpace(tuple(rk))
    A = random_homogeneous(ctx, sp, rng, 0, scale=0.4)
    ref = superexp_taylor(A, 60)
    assert (superexp(A) - ref).norm() <= 1e-10 * max(1.0, ref.norm())


def test_superexp_scalar_part_is_matrix_exp(rng):
    from scipy.linalg import expm

    ctx, sp = FormContext(2), GradedSpace((2, 2))
    m = rng.standard_normal((4, 4)) * sp.parity_mask.__eq__(0)
    A = SuperElement.from_matrix(ctx, sp, 3.0 * m)
    assert np.allclose(superexp(A).matrix(0), expm(3.0 * m), atol=1e-9)


def test_superexp_rejects_odd(rng):
    ctx, sp = FormContext(2), GradedSpace((1, 1))
    with pytest.raises(ParityError):
        superexp(random_homogeneous(ctx, sp, rng, 1))


def test_supertrace_of_number_operator():
    ctx, sp = FormContext(2), GradedSpace((2, 3, 1))
    N = SuperElement.from_matrix(ctx, sp, sp.number_operator)
    assert np.isclose(supertrace(N)[0], -3 + 2)
