import logging

import numpy as np
import pytest

from support import E1, E2, e5_alphas, e5_loop, loop_corpus, random_alphas
from unitons.factorization import (
    Factorization,
    FactorizationError,
    extract_uniton_subspace,
    factorize_from_filtration,
    factorize_segal,
    partial_product_defect,
    range_at_zero,
    verify_product,
)
from unitons.grassmann import (
    ComplementSpace,
    VectorPoly,
    complement_basis,
    segal_levels,
)
from unitons.looppoly import (
    MatrixLaurentPoly,
    Subspace,
    bp_factor,
    bp_product,
    determinant,
    max_angle,
    sup_distance,
    unitarity_defect,
)

D1L = bp_factor(Subspace.span(E1[:, None]))
LAM = MatrixLaurentPoly(1, np.eye(2)[None])


def test_extract_examples():
    I2 = MatrixLaurentPoly.identity(2)
    a = extract_uniton_subspace(I2, ComplementSpace(2, 1, [VectorPoly(E2[None])]))
    assert a.dim == 1 and max_angle(a.frame, E1[:, None]) < 1e-12
    a0 = extract_uniton_subspace(I2, ComplementSpace(2, 1, [VectorPoly(E1[None]), VectorPoly(E2[None])]))
    assert a0.dim == 0


def test_extract_second_e5_factor_against_brute_force():
    alphas = e5_alphas()
    K = complement_basis(e5_loop())
    a2 = extract_uniton_subspace(D1L, K, rank=1)
    assert a2.dim == 1
    # brute force: v with <D1L v, q> = 0 for all q; columns of the 2x2 system by hand
    sysm = np.array([[sum(np.vdot(q.padded(2).reshape(2, 2)[k], D1L.coefficient(k)[:, j])
                          for k in range(2)) for j in range(2)] for q in K.basis])
    null = np.linalg.svd(sysm)[2][-1:].conj().T
    assert max_angle(a2.frame, null) < 1e-12
    assert max_angle(a2, alphas[1]) < 1e-12


def test_filtration_examples():
    f = factorize_from_filtration(segal_levels(complement_basis(D1L), 1))
    assert len(f) == 1 and max_angle(f.factors[0], Subspace.span(E1[:, None])) < 1e-12
    f2 = factorize_from_filtration(segal_levels(complement_basis(LAM), 1))
    assert len(f2) == 1 and f2.factors[0].dim == 0
    b = e5_loop()
    f3 = factorize_from_filtration(segal_levels(complement_basis(b), 2))
    assert len(f3) == 2 and verify_product(f3, b) <= 1e-9


def test_segal_examples():
    alpha = Subspace.span(np.array([[1.0], [2j], [0.5]]))
    f = factorize_segal(bp_factor(alpha))
    assert len(f) == 1 and max_angle(f.factors[0], alpha) < 1e-12
    f2 = factorize_segal(LAM)
    assert len(f2) == 1 and f2.factors[0].dim == 0 and verify_product(f2, LAM) <= 1e-14
    b = e5_loop()
    f3 = factorize_segal(b)
    u, s, _ = np.linalg.svd(b.coefficient(0))
    rng0 = u[:, s > 1e-9]
    assert len(f3) == 2 and max_angle(f3.factors[0].frame, rng0) <= 1e-8
    assert verify_product(f3, b) <= 1e-9
    assert verify_product(factorize_segal(D1L), D1L) <= 1e-14


def test_repeated_level_drops_identity_factor(caplog):
    K = complement_basis(D1L)
    with caplog.at_level(logging.WARNING):
        f = factorize_from_filtration([K, K])
    assert len(f) == 1 and "identity factor dropped" in caplog.text


def test_segal_requires_normalized_loop():
    swap = MatrixLaurentPoly.constant(np.array([[0, 1], [1, 0]]))
    with pytest.raises(FactorizationError):
        factorize_segal(swap)


CORPUS = loop_corpus(100, seed=7)


@pytest.mark.parametrize("idx", range(0, 100, 4))
def test_partial_products_and_levels(idx):
    alphas, b = CORPUS[idx]
    f = factorize_segal(b)
    d = determinant(b)
    assert sum(f.codims) == (d.kmax if not d.is_zero else 0)
    assert partial_product_defect(f) <= 1e-12
    levels = segal_levels(complement_basis(b), max(b.degree, 1))
    for B, K in zip(f.partial_products[1:], [lv for lv in levels if lv.dim]):
        assert unitarity_defect(B) <= 1e-10
        Kd = complement_basis(B)
        L = max(Kd.length, K.length)
        assert Kd.dim == K.dim and max_angle(Kd.orthonormal_matrix(L), K.orthonormal_matrix(L)) <= 1e-8
    if f.factors:
        assert max_angle(range_at_zero(b), f.factors[0]) <= 1e-8


def test_known_factors_recovered_for_generic_input():
    # Segal factors differ from the input factors in general; their product does not
    rng = np.random.default_rng(5)
    alphas = random_alphas(rng, 3, 3)
    b = bp_product(alphas)
    f = Factorization.from_subspaces(factorize_segal(b).factors)
    assert sup_distance(f.product, b) <= 1e-9
