"""
Form-valued supermatrices
=========================

Build a small graded space, multiply odd elements with the Koszul sign and
watch the supertrace kill supercommutators.
"""
import numpy as np

from torsionlab.exterior import FormContext
from torsionlab.supermatrix import GradedSpace, SuperElement, smul, supercommutator, superexp, supertrace

ctx = FormContext(2)          # forms on T^2: 1, dx1, dx2, dx1^dx2
space = GradedSpace((1, 2))   # E^0 = C, E^1 = C^2
print("N =", np.diag(space.number_operator), " eps =", space.epsilon)

rng = np.random.default_rng(0)
raw = rng.standard_normal((ctx.dim, 3, 3)) + 1j * rng.standard_normal((ctx.dim, 3, 3))
A = SuperElement(ctx, space, raw).odd_part()
B = SuperElement(ctx, space, raw.conj()).odd_part()

# two odd elements: the supercommutator is AB + BA
print("|str[A, B]| =", supertrace(supercommutator(A, B)).norm())
print("|str[AB]|   =", supertrace(smul(A, B)).norm())

# the exponential of an even element; its form part is nilpotent
X = SuperElement(ctx, space, 0.3 * raw).even_part()
E = superexp(X)
print("str exp(X) by degree:", np.round(supertrace(E).coeffs, 6))
