"""Finite-dimensional model of ``W = b H_+`` through its orthocomplement in ``H_+``.

For a polynomial Blaschke-Potapov product ``b`` of degree ``m`` the complement
``K = H_+ ⊖ b H_+`` consists of vector polynomials of degree at most ``m - 1``.
Spaces of such polynomials are handled as coefficient matrices of shape
``(m * n, dim)`` whose column blocks ``[j*n:(j+1)*n]`` hold the ``λ^j``
coefficients; the ``H_+`` inner product is then the Euclidean one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .looppoly import MatrixLaurentPoly, determinant, evaluate, unitarity_defect

NULL_TOL = 1e-9
TRIM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class VectorPoly:
    """``p(λ) = Σ_j p̂_j λ^j`` with ``coeffs[j] = p̂_j`` in C^n."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=complex))
        mags = np.abs(c).max(axis=1) if c.size else np.zeros(0)
        if mags.size and mags.max() > 0:
            last = np.flatnonzero(mags >= TRIM_TOL * mags.max())[-1]
            c = c[:last + 1]
        else:
            c = c[:0] if c.ndim == 2 else c
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_vector(cls, column: np.ndarray, n: int) -> "VectorPoly":
        return cls(np.asarray(column, complex).reshape(-1, n))

    @classmethod
    def zero(cls, n: int) -> "VectorPoly":
        return cls(np.zeros((0, n), complex))

    @property
    def n(self) -> int:
        return self.coeffs.shape[1]

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def leading(self) -> np.ndarray:
        return self.coeffs[-1]

    def padded(self, length: int) -> np.ndarray:
        if self.coeffs.shape[0] > length:
            raise ValueError(f"degree {self.degree} does not fit in {length} coefficients")
        out = np.zeros((length, self.n), complex)
        out[:self.coeffs.shape[0]] = self.coeffs
        return out.reshape(-1)

    def __call__(self, lam) -> np.ndarray:
        lam = np.asarray(lam, complex)
        out = np.zeros(lam.shape + (self.n,), complex)
        for c in self.coeffs[::-1]:
            out = out * lam[..., None] + c
        return out

    def __repr__(self):
        return f"VectorPoly(n={self.n}, degree={self.degree})"


def hplus_inner(p: VectorPoly, q: VectorPoly) -> complex:
    """``Σ_k q̂_k^H p̂_k``: linear in ``p``, conjugate-linear in ``q``."""
    if p.n != q.n:
        raise ValueError(f"dimension mismatch: {p.n} vs {q.n}")
    k = min(p.coeffs.shape[0], q.coeffs.shape[0])
    return complex(np.sum(np.conj(q.coeffs[:k]) * p.coeffs[:k]))


def shift(p: VectorPoly) -> VectorPoly:
    """Forward shift ``(Tp)(λ) = λ p(λ)``."""
    if p.degree < 0:
        return p
    return VectorPoly(np.vstack([np.zeros((1, p.n), complex), p.coeffs]))


def coefficient_matrix(polys, n: int, length: int) -> np.ndarray:
    """Stack polynomials as columns of a ``(length*n, len(polys))`` matrix."""
    if not polys:
        return np.zeros((length * n, 0), complex)
    return np.stack([p.padded(length) for p in polys], axis=1)


def columns_to_polys(mat: np.ndarray, n: int) -> list[VectorPoly]:
    return [VectorPoly.from_vector(mat[:, c], n) for c in range(mat.shape[1])]


def orthonormal_columns(mat: np.ndarray) -> np.ndarray:
    if mat.shape[1] == 0:
        return mat
    q, _ = np.linalg.qr(mat)
    return q


class ComplementSpace:
    """Span of vector polynomials of degree ``< length`` in C^n."""

    def __init__(self, n: int, length: int, basis):
        self.n = int(n)
        self.length = int(length)
        self.basis = tuple(basis)
        for p in self.basis:
            if p.n != self.n:
                raise ValueError("basis element has the wrong ambient dimension")
            if p.degree >= self.length:
                raise ValueError(f"basis element of degree {p.degree} exceeds {self.length - 1}")

    @classmethod
    def from_matrix(cls, mat: np.ndarray, n: int, length: int | None = None) -> "ComplementSpace":
        length = mat.shape[0] // n if length is None else length
        return cls(n, length, columns_to_polys(mat, n))

    @property
    def max_degree(self) -> int:
        return self.length - 1

    @property
    def dim(self) -> int:
        return len(self.basis)

    def matrix(self, length: int | None = None) -> np.ndarray:
        return coefficient_matrix(list(self.basis), self.n, self.length if length is None else length)

    def orthonormal_matrix(self, length: int | None = None) -> np.ndarray:
        return orthonormal_columns(self.matrix(length))

    def gram(self) -> np.ndarray:
        m = self.matrix()
        return m.conj().T @ m

    def projection(self, vec: np.ndarray) -> np.ndarray:
        """Orthogonal projection of a coefficient vector (or stack of columns)."""
        q = self.orthonormal_matrix()
        v = np.asarray(vec, complex)
        return q @ (q.conj().T @ v)

    def __repr__(self):
        return f"ComplementSpace(n={self.n}, max_degree={self.max_degree}, dim={self.dim})"


def homogeneous_system(b_coeffs: np.ndarray, length: int) -> np.ndarray:
    """Matrix of ``p ↦ (⟨p, λ^j b e_i⟩)_{j<length, i}`` on coefficient vectors."""
    n = b_coeffs.shape[1]
    sys = np.zeros((length * n, length * n), complex)
    for j in range(length):
        for l in range(j, length):
            k = l - j
            if k < b_coeffs.shape[0]:
                sys[j * n:(j + 1) * n, l * n:(l + 1) * n] = b_coeffs[k].conj().T
    return sys


def null_space(mat: np.ndarray, tol: float = NULL_TOL, rank: int | None = None):
    """Orthonormal null space basis and the singular values of ``mat``."""
    _, s, vh = np.linalg.svd(mat)
    if rank is None:
        rank = int(np.sum(s > tol * s[0])) if s.size and s[0] > 0 else 0
    return vh[rank:].conj().T, s


def complement_from_coeffs(b_coeffs: np.ndarray, expected_dim: int | None = None) -> ComplementSpace:
    """Null space of the homogeneous system for an arbitrary polynomial.

    No unitarity is assumed, which makes this usable on ``b(μ·)`` directly.
    """
    length = b_coeffs.shape[0] - 1
    n = b_coeffs.shape[1]
    if length <= 0:
        return ComplementSpace(n, 1, [])
    basis, _ = null_space(homogeneous_system(b_coeffs, length), rank=None
                          if expected_dim is None else length * n - expected_dim)
    return ComplementSpace.from_matrix(basis, n, length)


def complement_basis(b: MatrixLaurentPoly, check: bool = True) -> ComplementSpace:
    """Orthonormal basis of ``H_+ ⊖ b H_+``."""
    if not b.is_polynomial:
        raise ValueError("loop must be polynomial")
    if check and unitarity_defect(b, max(16, 4 * (b.degree + 1))) > 1e-9:
        raise ValueError("loop is not unitary on the circle")
    coeffs = b.polynomial_coeffs()
    length = coeffs.shape[0] - 1
    if length <= 0:
        return ComplementSpace(b.n, 1, [])
    basis, _ = null_space(homogeneous_system(coeffs, length))
    if check:
        deg = determinant(b).degree
        if basis.shape[1] != deg:
            raise np.linalg.LinAlgError(
                f"complement dimension {basis.shape[1]} differs from deg det b = {deg}")
    return ComplementSpace.from_matrix(basis, b.n, length)


class GradedBasis:
    """Basis with nondecreasing degrees whose low-degree members span each filtration step."""

    def __init__(self, polys, n: int, length: int):
        self.polys = tuple(polys)
        self.n = n
        self.length = length
        self.degrees = tuple(p.degree for p in self.polys)
        if any(a > b for a, b in zip(self.degrees, self.degrees[1:])):
            raise ValueError("degrees must be nondecreasing")

    @property
    def dim(self) -> int:
        return len(self.polys)

    @property
    def max_degree(self) -> int:
        return max(self.degrees) if self.degrees else -1

    def matrix(self, length: int | None = None) -> np.ndarray:
        return coefficient_matrix(list(self.polys), self.n, self.length if length is None else length)

    def up_to_degree(self, j: int) -> "GradedBasis":
        return GradedBasis([p for p in self.polys if p.degree <= j], self.n, self.length)

    def space(self) -> ComplementSpace:
        return ComplementSpace(self.n, self.length, self.polys)

    def leading_matrix(self, degree: int) -> np.ndarray:
        cols = [p.leading for p in self.polys if p.degree == degree]
        return np.stack(cols, axis=1) if cols else np.zeros((self.n, 0), complex)

    def __repr__(self):
        return f"GradedBasis(degrees={self.degrees})"


def degree_graded_basis(K: ComplementSpace, tol: float = NULL_TOL) -> GradedBasis:
    """Graded orthonormal basis of ``K``.

    For each degree ``j`` the subspace ``K ∩ {deg ≤ j}`` is the null space of the
    coefficient rows above ``j``; new elements are taken orthogonal to the previous
    step, so equal-degree leading coefficients are independent by construction.
    """
    n, length = K.n, K.length
    if K.dim and np.linalg.svd(K.matrix(), compute_uv=False)[-1] < tol:
        raise np.linalg.LinAlgError("input basis is numerically dependent")
    q = K.orthonormal_matrix()
    polys: list[VectorPoly] = []
    prev = np.zeros((length * n, 0), complex)
    for j in range(length):
        high = q[(j + 1) * n:, :]
        if high.shape[0]:
            _, s, vh = np.linalg.svd(high)
            # q is orthonormal, so an absolute cut is scale-free here
            rank = int(np.sum(s > tol))
            sub = q @ vh[rank:].conj().T
        else:
            sub = q
        fresh = sub.shape[1] - prev.shape[1]
        if fresh <= 0:
            continue
        sub = sub - prev @ (prev.conj().T @ sub)
        u, _, _ = np.linalg.svd(sub, full_matrices=False)
        new = u[:, :fresh]
        new[(j + 1) * n:] = 0
        polys.extend(VectorPoly.from_vector(new[:, c], n) for c in range(fresh))
        prev = np.hstack([prev, new])
    if len(polys) != K.dim:
        raise np.linalg.LinAlgError(f"graded basis has {len(polys)} elements, expected {K.dim}")
    return GradedBasis(polys, n, length)


def reproducing_kernel(b: MatrixLaurentPoly, zeta: complex, i: int, tol: float = 1e-10) -> VectorPoly:
    """``k(λ) = (1 - ζ̄λ)^{-1} (I - b(λ) b(ζ)^H) e_i`` as an explicit polynomial."""
    if abs(zeta) > 1 + 1e-12:
        raise ValueError("|ζ| must not exceed 1")
    n = b.n
    coeffs = b.polynomial_coeffs()
    bz = evaluate(b, zeta)
    num = -(coeffs @ bz.conj().T[:, i])
    num[0, i] += 1.0
    # synthetic division by (1 - conj(ζ) λ)
    c = np.conj(zeta)
    quot = np.zeros_like(num)
    carry = np.zeros(n, complex)
    for k in range(num.shape[0]):
        carry = num[k] + c * carry
        quot[k] = carry
    remainder = quot[-1]
    scale = max(np.abs(num).max(), 1.0)
    if np.abs(remainder).max() > tol * scale:
        raise ArithmeticError(f"kernel division remainder {np.abs(remainder).max():.3e}")
    return VectorPoly(quot[:-1] if quot.shape[0] > 1 else np.zeros((0, n)))


def segal_levels(K: ComplementSpace | GradedBasis, m: int) -> list[ComplementSpace]:
    """Complements of ``W + T^k H_+`` for ``k = 1..m``: degree-``≤ k-1`` members of ``K``."""
    graded = K if isinstance(K, GradedBasis) else degree_graded_basis(K)
    levels = [graded.up_to_degree(k - 1).space() for k in range(1, m + 1)]
    if m and levels[-1].dim != graded.dim:
        raise ValueError(f"m={m} is too small for a complement of degree {graded.max_degree}")
    return levels


def reproduction_error(b: MatrixLaurentPoly, K: ComplementSpace, zetas=(0, 0.3, 0.5j)) -> float:
    """Largest deviation of ``⟨p, k_ζ^i⟩`` from ``⟨p(ζ), e_i⟩`` over the basis of ``K``."""
    worst = 0.0
    for zeta in zetas:
        for i in range(b.n):
            k = reproducing_kernel(b, zeta, i)
            for p in K.basis:
                worst = max(worst, abs(hplus_inner(p, k) - p(zeta)[i]))
    return worst
