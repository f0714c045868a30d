"""The deformation ``Φ ↦ Φ^μ`` for every complex μ, including the limit μ = 0.

``Φ^μ`` is the normalized Blaschke-Potapov part of ``λ ↦ Φ(μλ)``.  Instead of
solving the homogeneous system for ``Φ(μ·)``, which degenerates at μ = 0, a
degree-graded basis ``p_k`` of the complement is rescaled to

    q_k(λ) = conj(μ)^{d_k} p_k(λ / conj(μ)),

whose span is the complement of ``Φ^μ H_+`` and which stays a basis as μ → 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .factorization import Factorization, factorize_from_filtration
from .grassmann import (
    ComplementSpace,
    GradedBasis,
    VectorPoly,
    complement_basis,
    complement_from_coeffs,
    degree_graded_basis,
)
from .looppoly import (
    MatrixLaurentPoly,
    circle_adjoint,
    evaluate,
    max_angle,
    multiply,
    substitute_scale,
    unit_circle,
)

GRAM_TOL = 1e-10


class DeformationError(ValueError):
    pass


def transform_basis(graded: GradedBasis, mu: complex) -> list[VectorPoly]:
    """Coefficientwise ``q̂_{k,j} = conj(μ)^{d_k - j} p̂_{k,j}``; μ = 0 keeps leading monomials."""
    w = np.conj(complex(mu))
    out = []
    for p in graded.polys:
        d = p.degree
        scale = np.array([w ** (d - j) for j in range(d + 1)])
        out.append(VectorPoly(p.coeffs * scale[:, None]))
    return out


def gram_of(polys, n: int, length: int) -> np.ndarray:
    mats = np.stack([p.padded(length) for p in polys], axis=1) if polys else np.zeros((0, 0))
    return mats.conj().T @ mats


def normalized_det(gram: np.ndarray) -> float:
    """``det A / ||A||_2``; 1 for an empty matrix."""
    if gram.size == 0:
        return 1.0
    norm = np.linalg.norm(gram, 2)
    return float(np.real(np.linalg.det(gram)) / norm) if norm > 0 else 0.0


@dataclass(frozen=True, eq=False)
class DeformationFamily:
    """Base loop, graded complement basis, and one graded basis per filtration level."""

    base_loop: MatrixLaurentPoly
    graded: GradedBasis
    levels: tuple
    kind: str = "segal"

    @property
    def n(self) -> int:
        return self.base_loop.n

    @property
    def m(self) -> int:
        return self.base_loop.degree

    @property
    def length(self) -> int:
        return max(self.graded.length, 1)

    @classmethod
    def segal(cls, b: MatrixLaurentPoly) -> "DeformationFamily":
        graded = degree_graded_basis(complement_basis(b))
        levels = tuple(graded.up_to_degree(k - 1) for k in range(1, graded.max_degree + 2))
        return cls(b, graded, levels, "segal")

    @classmethod
    def from_factorization(cls, f: Factorization) -> "DeformationFamily":
        """Family deforming a caller-supplied (e.g. uniton) factorization level by level."""
        b = f.product
        graded = degree_graded_basis(complement_basis(b))
        levels = tuple(degree_graded_basis(complement_basis(B)) for B in f.partial_products[1:])
        return cls(b, graded, levels, "filtration")


def transformed_levels(fam: DeformationFamily, mu: complex) -> list[ComplementSpace]:
    out = []
    for idx, level in enumerate(fam.levels):
        polys = transform_basis(level, mu)
        nd = normalized_det(gram_of(polys, fam.n, level.length))
        if nd < GRAM_TOL:
            raise DeformationError(
                f"Gram matrix of level {idx} is singular at μ={mu} (normalized det {nd:.3e}); "
                "the graded basis has dependent leading coefficients")
        out.append(ComplementSpace(fam.n, level.length, polys))
    return out


def gram_matrix(fam: DeformationFamily, mu: complex) -> np.ndarray:
    """``A(μ)_{ij} = ⟨q_i^μ, q_j^μ⟩`` for the full graded basis."""
    polys = transform_basis(fam.graded, mu)
    mat = np.stack([p.padded(fam.graded.length) for p in polys], axis=1) if polys else np.zeros((0, 0))
    return mat.T @ mat.conj()


def deform_unitons(fam: DeformationFamily, mu: complex, verify: bool = True) -> Factorization:
    """Factorization of ``Φ^μ`` along the deformed filtration."""
    return factorize_from_filtration(transformed_levels(fam, mu), n=fam.n, verify=verify)


def deform_loop(fam: DeformationFamily, mu: complex, verify: bool = True) -> MatrixLaurentPoly:
    """The normalized loop ``Φ^μ`` (equal to the base loop at μ = 1)."""
    return deform_unitons(fam, mu, verify=verify).product


def direct_complement(b: MatrixLaurentPoly, mu: complex) -> ComplementSpace:
    """Complement of ``b(μ·) H_+`` from its own homogeneous system (μ ≠ 0)."""
    if mu == 0:
        raise DeformationError("the direct system degenerates at μ = 0")
    scaled = substitute_scale(b, mu)
    coeffs = scaled.polynomial_coeffs(b.degree + 1)
    return complement_from_coeffs(coeffs)


def consistency_angle(fam: DeformationFamily, mu: complex) -> float:
    """Largest principal angle between transformed and directly computed complements."""
    direct = direct_complement(fam.base_loop, mu)
    length = max(direct.length, fam.graded.length)
    via_transform = ComplementSpace(fam.n, fam.graded.length, transform_basis(fam.graded, mu))
    return max_angle(direct.orthonormal_matrix(length), via_transform.orthonormal_matrix(length))


@dataclass(frozen=True)
class OuterPart:
    G: MatrixLaurentPoly
    negative_residual: float
    min_abs_det: float
    winding: int

    @property
    def valid(self) -> bool:
        return self.negative_residual < 1e-9 and self.min_abs_det > 0 and self.winding == 0


def outer_part(fam: DeformationFamily, mu: complex, samples: int = 256) -> OuterPart:
    """``G^μ = (b^μ)^* b(μ·)`` with the checks that it is analytic and invertible on the disc."""
    if mu == 0:
        raise DeformationError("G^μ is defined for μ ≠ 0 only")
    b_mu = deform_loop(fam, mu)
    full = multiply(circle_adjoint(b_mu), substitute_scale(fam.base_loop, mu))
    scale = max(np.abs(full.coeffs).max(), 1.0) if not full.is_zero else 1.0
    neg = max((np.abs(full.coefficient(k)).max() for k in range(full.kmin, 0)), default=0.0)
    G = MatrixLaurentPoly(0, np.stack([full.coefficient(k) for k in range(0, max(full.kmax, 0) + 1)]))
    radii = np.linspace(0.0, 1.0, 11)
    pts = (radii[:, None] * unit_circle(64)[None, :]).ravel()
    min_det = float(np.abs(np.linalg.det(evaluate(G, pts))).min())
    circle = np.linalg.det(evaluate(G, unit_circle(samples)))
    dphase = np.angle(np.roll(circle, -1) / circle)
    winding = int(np.rint(dphase.sum() / (2 * np.pi)))
    return OuterPart(G, float(neg / scale), min_det, winding)


def cocycle_defect(fam: DeformationFamily, lam1: complex, lam2: complex,
                   phi0: MatrixLaurentPoly | None = None) -> float:
    """``||Φ^0(λ1 λ2) - Φ^0(λ2) Φ^0(λ1)||_2``."""
    phi0 = deform_loop(fam, 0.0) if phi0 is None else phi0
    lhs = evaluate(phi0, lam1 * lam2)
    rhs = evaluate(phi0, lam2) @ evaluate(phi0, lam1)
    return float(np.linalg.norm(lhs - rhs, 2))


def max_cocycle_defect(fam: DeformationFamily, samples: int = 16,
                       phi0: MatrixLaurentPoly | None = None) -> float:
    """Worst cocycle defect over a ``samples x samples`` grid of circle pairs."""
    phi0 = deform_loop(fam, 0.0) if phi0 is None else phi0
    lam = unit_circle(samples, 0.37)
    vals = evaluate(phi0, lam)
    prods = evaluate(phi0, lam[:, None] * lam[None, :])
    rhs = vals[None, :] @ vals[:, None]
    return float(np.linalg.norm(prods - rhs, ord=2, axis=(-2, -1)).max())


def group_law_defect(fam: DeformationFamily, mu: complex, mu1: complex, lam: complex) -> float:
    """``||Φ^{μμ1}(λ) - Φ^μ(μ1 λ) Φ^μ(μ1)^{-1}||`` for ``|μ1| = 1``."""
    lhs = evaluate(deform_loop(fam, mu * mu1), lam)
    phi = deform_loop(fam, mu)
    rhs = evaluate(phi, mu1 * lam) @ np.linalg.inv(evaluate(phi, mu1))
    return float(np.linalg.norm(lhs - rhs, 2))


@dataclass(frozen=True)
class ProbeReport:
    theta: float
    gram_degree: int
    gram_residual: float
    loop_degree: int
    loop_residual: float


def _poly_fit_residual(t: np.ndarray, values: np.ndarray, degree: int) -> float:
    vander = np.vander(t, degree + 1, increasing=True).astype(complex)
    y = values.reshape(len(t), -1)
    coef, *_ = np.linalg.lstsq(vander, y, rcond=None)
    return float(np.abs(vander @ coef - y).max())


def analyticity_probe(fam: DeformationFamily, theta: float, t_samples: int = 32,
                      lam0: complex = np.exp(0.7j), loop_degree: int | None = None) -> ProbeReport:
    """Polynomial least-squares fits along ``μ = t e^{iθ}``, ``t ∈ [-1, 1]``.

    Gram entries must be polynomials of degree at most ``2 max d_k``; the loop
    entries at ``lam0`` are only expected to be well approximated.
    """
    dmax = max(fam.graded.max_degree, 0)
    gdeg = 2 * dmax
    if t_samples < 2 * dmax + 2:
        raise ValueError(f"need at least {2 * dmax + 2} samples")
    t = np.linspace(-1.0, 1.0, t_samples)
    mus = t * np.exp(1j * theta)
    grams = np.stack([gram_matrix(fam, mu) for mu in mus])
    loops = np.stack([evaluate(deform_loop(fam, mu, verify=False), lam0) for mu in mus])
    ldeg = min(t_samples - 2, 2 * gdeg + 4) if loop_degree is None else loop_degree
    return ProbeReport(theta, gdeg, _poly_fit_residual(t, grams, gdeg),
                       ldeg, _poly_fit_residual(t, loops, ldeg))
