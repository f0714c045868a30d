import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from support import E1, E2, e5_alphas, e5_loop, random_alphas
from unitons.deformation import (
    DeformationError,
    DeformationFamily,
    analyticity_probe,
    cocycle_defect,
    consistency_angle,
    deform_loop,
    deform_unitons,
    gram_matrix,
    group_law_defect,
    max_cocycle_defect,
    normalized_det,
    outer_part,
    transform_basis,
)
from unitons.factorization import Factorization
from unitons.grassmann import GradedBasis, VectorPoly
from unitons.looppoly import (
    MatrixLaurentPoly,
    Subspace,
    bp_factor,
    bp_product,
    determinant,
    evaluate,
    max_angle,
    sup_distance,
    unitarity_defect,
)

D1L = bp_factor(Subspace.span(E1[:, None]))


def family_of(polys, n=2):
    g = GradedBasis(polys, n, max(p.degree for p in polys) + 1)
    return DeformationFamily(MatrixLaurentPoly.identity(n), g, (g,))


def test_transform_examples():
    g = GradedBasis([VectorPoly(np.array([E2])), VectorPoly(np.array([E1, E1])),
                     VectorPoly(np.array([[0, 0], E1]))], 2, 2)
    for mu in (0.0, 0.4, 2.0):
        q0, q1, q2 = transform_basis(g, mu)
        assert np.allclose(q0.coeffs, [E2])
        assert np.allclose(q1.padded(2).reshape(2, 2), [mu * E1, E1])
        assert np.allclose(q2.padded(2).reshape(2, 2), [[0, 0], E1])
    # complex μ enters through its conjugate
    q1 = transform_basis(g, 0.3 + 0.4j)[1]
    assert np.allclose(q1.coeffs[0], (0.3 - 0.4j) * E1)


def test_gram_examples():
    b = e5_loop()
    fam = DeformationFamily.segal(b)
    assert np.allclose(gram_matrix(fam, 1.0), np.eye(fam.graded.dim), atol=1e-12)
    single = family_of([VectorPoly(np.array([E1, E1]))])
    for mu in (0.0, 0.5, 0.3 + 0.7j):
        A = gram_matrix(single, mu)
        assert A.shape == (1, 1) and abs(A[0, 0] - (abs(mu) ** 2 + 1)) < 1e-14
    A = gram_matrix(fam, 0.7 * np.exp(1j))
    assert np.allclose(A, A.conj().T) and np.linalg.eigvalsh(A).min() > 0


def test_deform_at_one_is_identity_map():
    rng = np.random.default_rng(0)
    for _ in range(10):
        b = bp_product(random_alphas(rng))
        assert sup_distance(deform_loop(DeformationFamily.segal(b), 1.0), b) <= 1e-12


@pytest.mark.parametrize("mu", [0, 0.25, 0.5 + 0.5j, 1, -2j])
def test_single_factor_fixed(mu):
    alpha = Subspace.span(np.array([[1.0, 0], [1j, 1], [0.5, 2]]))
    b = bp_factor(alpha)
    fam = DeformationFamily.segal(b)
    assert sup_distance(deform_loop(fam, mu), b) <= 1e-12
    f = deform_unitons(fam, mu)
    assert len(f) == 1 and max_angle(f.factors[0], alpha) <= 1e-10


def test_e5_limit_is_nested_by_hand():
    b = e5_loop()
    fam = DeformationFamily.segal(b)
    f0 = deform_unitons(fam, 0.0)
    # hand computation: graded basis {e2, λe1} survives unchanged at μ=0, so Φ^0 = diag(1, λ^2)
    phi0 = MatrixLaurentPoly.from_polynomial([np.diag([1, 0]), np.zeros((2, 2)), np.diag([0, 1])])
    assert sup_distance(f0.product, phi0) <= 1e-12
    a1, a2 = f0.factors
    assert np.linalg.norm((np.eye(2) - a2.projector()) @ a1.frame) <= 1e-12
    f1 = deform_unitons(fam, 1.0)
    assert sup_distance(f1.product, b) <= 1e-12


def test_e5_unitons_via_filtration_family():
    alphas = e5_alphas()
    fam = DeformationFamily.from_factorization(Factorization.from_subspaces(alphas))
    f1 = deform_unitons(fam, 1.0)
    assert all(max_angle(a, b) <= 1e-8 for a, b in zip(f1.factors, alphas))
    seg = DeformationFamily.segal(e5_loop())
    for mu in (0.0, 0.4, 0.3j):
        assert sup_distance(deform_loop(fam, mu), deform_loop(seg, mu)) <= 1e-10


def test_outer_part_examples():
    alpha = Subspace.span(np.array([[1.0], [1j]]))
    fam = DeformationFamily.segal(bp_factor(alpha))
    op = outer_part(fam, 0.3)
    p = alpha.projector()
    assert op.valid and np.allclose(op.G.coefficient(0), p + 0.3 * (np.eye(2) - p), atol=1e-12)
    op2 = outer_part(DeformationFamily.segal(D1L), 0.5)
    assert np.allclose(evaluate(op2.G, 0.8), np.diag([1, 0.5]), atol=1e-12)
    op3 = outer_part(DeformationFamily.segal(e5_loop()), 0.5)
    assert op3.valid and op3.winding == 0
    with pytest.raises(DeformationError):
        outer_part(fam, 0)


def test_cocycle_examples():
    fam = DeformationFamily.segal(bp_factor(Subspace.span(np.array([[1.0], [2.0]]))))
    assert cocycle_defect(fam, np.exp(0.3j), np.exp(2.1j)) <= 1e-12
    diag = MatrixLaurentPoly.from_polynomial([np.diag([1, 0, 0]), np.diag([0, 1, 0]), np.zeros((3, 3)),
                                               np.diag([0, 0, 1])])
    assert max_cocycle_defect(DeformationFamily.segal(diag)) <= 1e-12
    assert max_cocycle_defect(DeformationFamily.segal(e5_loop())) <= 1e-8
    # a generic loop is not multiplicative
    b = e5_loop()
    assert np.linalg.norm(evaluate(b, -1) - evaluate(b, 1j) @ evaluate(b, 1j)) > 0.1


def test_analyticity_examples():
    t = np.linspace(-1, 1, 9)
    single = family_of([VectorPoly(np.array([E1, E1]))])
    vals = np.array([gram_matrix(single, x)[0, 0] for x in t])
    coef = np.polyfit(t, vals.real, 2)
    assert np.allclose(coef, [1, 0, 1], atol=1e-12) and np.abs(vals.imag).max() == 0
    assert analyticity_probe(DeformationFamily.segal(D1L), 0.0, 4).gram_residual == 0
    rep = analyticity_probe(DeformationFamily.segal(e5_loop()), np.pi / 4, 32)
    assert rep.gram_residual <= 1e-8


def test_gram_singularity_is_reported():
    # dependent leading coefficients violate the graded-basis contract
    bad = GradedBasis([VectorPoly(np.array([E2, E1])), VectorPoly(np.array([E1, E1]))], 2, 2)
    fam = DeformationFamily(MatrixLaurentPoly.identity(2), bad, (bad,))
    assert normalized_det(gram_matrix(fam, 0.0)) < 1e-10
    with pytest.raises(DeformationError):
        deform_loop(fam, 0.0)


@st.composite
def families(draw):
    seed = draw(st.integers(0, 2**31 - 1))
    rng = np.random.default_rng(seed)
    return DeformationFamily.segal(bp_product(random_alphas(rng, draw(st.integers(2, 4)))))


angles = st.sampled_from([0.0, np.pi / 3, np.pi / 2])


@settings(max_examples=30, deadline=None)
@given(families(), angles, st.floats(0, 1))
def test_unitarity_and_degree_along_lines(fam, theta, t):
    mu = t * np.exp(1j * theta)
    b_mu = deform_loop(fam, mu)
    assert unitarity_defect(b_mu) <= 1e-9
    assert np.abs(evaluate(b_mu, 1.0) - np.eye(fam.n)).max() <= 1e-9
    d, d0 = determinant(b_mu), determinant(fam.base_loop)
    assert (0 if d.is_zero else d.kmax) == (0 if d0.is_zero else d0.kmax)


@settings(max_examples=30, deadline=None)
@given(families(), st.complex_numbers(min_magnitude=0.1, max_magnitude=1.5))
def test_consistency_with_direct_system(fam, mu):
    assert consistency_angle(fam, mu) <= 1e-8


@settings(max_examples=20, deadline=None)
@given(families(), st.floats(0, 1), st.floats(0, 2 * np.pi), st.floats(0, 2 * np.pi))
def test_group_law_on_the_circle(fam, r, a, c):
    mu = r * np.exp(0.4j)
    assert group_law_defect(fam, mu, np.exp(1j * a), np.exp(1j * c)) <= 1e-8


@settings(max_examples=20, deadline=None)
@given(families())
def test_limit_is_multiplicative(fam):
    assert max_cocycle_defect(fam) <= 1e-8
