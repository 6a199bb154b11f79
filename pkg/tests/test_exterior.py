import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torsionlab.exterior import (
    Form,
    FormContext,
    component,
    merge_sign,
    phi_factors,
    phi_normalize,
    wedge,
)

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 4)


def rand(ctx, seed, degrees=None):
    return ctx.random(np.random.default_rng(seed), degrees=degrees)


def test_generators_anticommute():
    c = FormContext(3)
    a, b = c.generator(1), c.generator(3)
    assert (a ^ b).allclose(-(b ^ a))
    assert (a ^ a).norm() == 0


def test_monomial_sign_and_labels():
    c = FormContext(3)
    assert c.monomial(2, 1)[c.mask(1, 2)] == -1
    assert c.labels[c.mask(1, 3)] == "dx1^dx3"
    assert c.labels[0] == "1"


def test_merge_sign_overlap_is_zero():
    assert merge_sign(0b01, 0b01) == 0
    assert merge_sign(0b10, 0b01) == -1
    assert merge_sign(0b01, 0b10) == 1


@settings(max_examples=40, deadline=None)
@given(dims, seeds, seeds, seeds)
def test_wedge_associative(p, s1, s2, s3):
    c = FormContext(p)
    a, b, d = rand(c, s1), rand(c, s2), rand(c, s3)
    assert ((a ^ b) ^ d).allclose(a ^ (b ^ d), atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(dims, st.integers(0, 4), st.integers(0, 4), seeds, seeds)
def test_graded_commutativity(p, i, j, s1, s2):
    c = FormContext(p)
    if i > p or j > p:
        return
    a, b = rand(c, s1, [i]), rand(c, s2, [j])
    assert (a ^ b).allclose((-1) ** (i * j) * (b ^ a), atol=1e-10)


def test_batched_wedge_matches_loop(rng):
    c = FormContext(3)
    A = c.random(rng, shape=(5,))
    B = c.random(rng, shape=(5,))
    AB = wedge(A, B)
    for k in range(5):
        single = Form(c, A.coeffs[k]) ^ Form(c, B.coeffs[k])
        assert np.allclose(AB.coeffs[k], single.coeffs)


def test_phi_even_degrees_independent_of_root():
    c = FormContext(4)
    f1 = phi_factors(c)
    f2 = phi_factors(c, -np.exp(1j * np.pi / 4))
    even = c.degrees % 2 == 0
    assert np.allclose(f1[even], f2[even])
    assert np.allclose(f1[c.mask(1, 2)], 1 / (2j * np.pi))
    assert not np.allclose(f1[~even], f2[~even])


def test_phi_rejects_bad_root():
    with pytest.raises(ValueError):
        phi_factors(FormContext(2), 1j)


def test_phi_is_multiplicative(rng):
    c = FormContext(4)
    a, b = c.random(rng), c.random(rng)
    assert phi_normalize(a ^ b).allclose(phi_normalize(a) ^ phi_normalize(b), atol=1e-12)


def test_component_and_homogeneity(rng):
    c = FormContext(3)
    a = c.random(rng)
    parts = sum((component(a, i) for i in range(4)), c.zero())
    assert parts.allclose(a)
    assert component(a, 2).is_homogeneous()
    assert not a.is_homogeneous()
    with pytest.raises(ValueError):
        component(a, 4)


def test_context_mismatch():
    with pytest.raises(ValueError):
        FormContext(2).scalar() + FormContext(3).scalar()
