"""Blaschke-Potapov factorizations read off from filtrations of complement spaces."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .grassmann import (
    ComplementSpace,
    complement_basis,
    degree_graded_basis,
    segal_levels,
)
from .looppoly import (
    MatrixLaurentPoly,
    Subspace,
    bp_factor,
    evaluate,
    max_angle,
    multiply,
    sup_distance,
    unit_circle,
)

log = logging.getLogger(__name__)

EXTRACT_TOL = 1e-9
VERIFY_TOL = 1e-8


class FactorizationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Factorization:
    """Subspaces ``α_1..α_m`` with partial products ``b_0 = I, b_1, ..., b_m``."""

    factors: tuple
    partial_products: tuple

    @property
    def n(self) -> int:
        return self.partial_products[0].n

    @property
    def product(self) -> MatrixLaurentPoly:
        return self.partial_products[-1]

    @property
    def unitons(self) -> list[MatrixLaurentPoly]:
        return [bp_factor(a) for a in self.factors]

    @property
    def codims(self) -> tuple[int, ...]:
        return tuple(a.codim for a in self.factors)

    @classmethod
    def from_subspaces(cls, alphas) -> "Factorization":
        alphas = tuple(alphas)
        if not alphas:
            raise ValueError("need at least one factor")
        prods = [MatrixLaurentPoly.identity(alphas[0].ambient)]
        for a in alphas:
            prods.append(multiply(prods[-1], bp_factor(a)))
        return cls(alphas, tuple(prods))

    def __len__(self):
        return len(self.factors)


def extract_uniton_subspace(B_prev: MatrixLaurentPoly, K_k: ComplementSpace,
                            rank: int | None = None, tol: float = EXTRACT_TOL) -> Subspace:
    """α = {v : ⟨B_prev v, q⟩ = 0 for all q in K_k}.

    ``rank`` (the codimension of α) overrides the tolerance-based rank decision
    when the caller knows it, e.g. from dimension counts along a filtration.
    """
    n = B_prev.n
    if n == 0:
        raise FactorizationError("empty ambient space")
    if K_k.dim == 0:
        return Subspace.full(n)
    length = max(K_k.length, B_prev.degree + 1)
    q = K_k.matrix(length).reshape(length, n, K_k.dim)
    B = B_prev.polynomial_coeffs(length)
    # rows: Σ_l q̂_l^H B̂_l
    system = np.einsum("lic,lij->cj", np.conj(q), B)
    _, s, vh = np.linalg.svd(system)
    s_full = np.zeros(n)
    s_full[:s.size] = s
    scale = s_full[0] if s_full[0] > 0 else 1.0
    tol_rank = int(np.sum(s_full > tol * scale))
    ambiguous = np.any((s_full > 1e-10 * scale) & (s_full < 1e-8 * scale))
    if ambiguous:
        log.warning("singular values %s fall in the ambiguous rank band", s_full)
    if rank is None:
        rank = tol_rank
    elif rank != tol_rank:
        log.warning("expected rank %d but tolerance gives %d (singular values %s)",
                    rank, tol_rank, s_full)
    null = vh[rank:].conj().T
    return Subspace.from_projector(null @ null.conj().T, n - rank)


def factorize_from_filtration(levels, n: int | None = None, verify: bool = True,
                              tol: float = VERIFY_TOL) -> Factorization:
    """Factor along nested complement levels ``K_1 ⊂ ... ⊂ K_m``.

    Level dimensions fix every factor's codimension, so the rank decisions in
    :func:`extract_uniton_subspace` are never left to a tolerance alone.
    """
    levels = list(levels)
    if not levels:
        if n is None:
            raise FactorizationError("no levels and no ambient dimension")
        return Factorization((), (MatrixLaurentPoly.identity(n),))
    n = levels[0].n if n is None else n
    B = MatrixLaurentPoly.identity(n)
    factors, prods = [], [B]
    prev_dim = 0
    for idx, level in enumerate(levels):
        codim = level.dim - prev_dim
        if codim < 0:
            raise FactorizationError(f"level {idx} is smaller than its predecessor")
        if codim > n:
            raise FactorizationError(f"level {idx} grows by {codim} > n = {n}")
        if codim == 0:
            log.warning("level %d repeats its predecessor; identity factor dropped", idx)
            continue
        alpha = extract_uniton_subspace(B, level, rank=codim)
        B = multiply(B, bp_factor(alpha))
        factors.append(alpha)
        prods.append(B)
        prev_dim = level.dim
    fact = Factorization(tuple(factors), tuple(prods))
    if verify and factors:
        err = complement_mismatch(fact.product, levels[-1])
        if err > tol:
            raise FactorizationError(f"complement of the product misses the last level by {err:.3e}")
    return fact


def complement_mismatch(b: MatrixLaurentPoly, K: ComplementSpace) -> float:
    """Largest principal angle between ``H_+ ⊖ bH_+`` and ``K``."""
    direct = complement_basis(b, check=False)
    length = max(direct.length, K.length)
    return max_angle(direct.orthonormal_matrix(length), K.orthonormal_matrix(length))


def factorize_segal(b: MatrixLaurentPoly) -> Factorization:
    """Standard factorization from ``W_k = W + T^k H_+``."""
    if not b.is_polynomial:
        raise FactorizationError("loop must be polynomial")
    if np.abs(evaluate(b, 1.0) - np.eye(b.n)).max() > 1e-9:
        raise FactorizationError("loop is not normalized at λ = 1")
    K = complement_basis(b)
    graded = degree_graded_basis(K)
    levels = segal_levels(graded, graded.max_degree + 1)
    fact = factorize_from_filtration(levels, n=b.n)
    if fact.factors:
        rng = range_at_zero(b)
        if rng.dim < b.n and max_angle(rng, fact.factors[0]) > 1e-8:
            log.warning("first Segal factor differs from range b(0)")
    return fact


def range_at_zero(b: MatrixLaurentPoly, tol: float = 1e-9) -> Subspace:
    """Column space of ``b(0)``."""
    b0 = b.coefficient(0)
    u, s, _ = np.linalg.svd(b0)
    r = int(np.sum(s > tol * max(s[0], 1e-300))) if s.size else 0
    return Subspace.from_projector(u[:, :r] @ u[:, :r].conj().T, r)


def verify_product(f: Factorization, b: MatrixLaurentPoly, samples: int = 64) -> float:
    """``sup_{|λ|=1} ||Π factors(λ) - b(λ)||_2`` over sampled points."""
    prod = MatrixLaurentPoly.identity(b.n)
    for a in f.factors:
        prod = multiply(prod, bp_factor(a))
    return sup_distance(prod, b, samples)


def partial_product_defect(f: Factorization) -> float:
    """Consistency of stored partial products with the factor list."""
    worst = 0.0
    prod = MatrixLaurentPoly.identity(f.n)
    for a, stored in zip(f.factors, f.partial_products[1:]):
        prod = multiply(prod, bp_factor(a))
        lam = unit_circle(32)
        worst = max(worst, float(np.abs(evaluate(prod, lam) - evaluate(stored, lam)).max()))
    return worst
