"""Matrix Laurent polynomials in the circle variable and their unitary building blocks.

A loop ``L(λ) = Σ_k T_k λ^k`` is stored as an exponent offset ``kmin`` plus a
stack of ``n x n`` complex coefficient matrices.  Everything here is immutable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

TRIM_TOL = 1e-12
FRAME_TOL = 1e-12


def unit_circle(samples: int, offset: float = 0.0) -> np.ndarray:
    """Equispaced points on the unit circle."""
    return np.exp(2j * np.pi * (np.arange(samples) + offset) / samples)


def _canonical_phase(frame: np.ndarray) -> np.ndarray:
    # first non-negligible entry of every column real-positive
    frame = frame.copy()
    for c in range(frame.shape[1]):
        col = frame[:, c]
        idx = np.flatnonzero(np.abs(col) > 1e-8)
        if idx.size:
            ph = col[idx[0]] / abs(col[idx[0]])
            frame[:, c] = col / ph
    return frame


@dataclass(frozen=True, eq=False)
class Subspace:
    """A linear subspace of C^n held through an orthonormal frame (``n x d``)."""

    frame: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.frame, dtype=complex)
        if f.ndim != 2:
            raise ValueError("frame must be a 2-d array")
        gram = f.conj().T @ f
        if f.shape[1] and np.abs(gram - np.eye(f.shape[1])).max() > FRAME_TOL * 10:
            raise ValueError("frame columns are not orthonormal")
        object.__setattr__(self, "frame", f)

    @classmethod
    def span(cls, vectors, rank_tol: float = 1e-8) -> "Subspace":
        """Orthonormalize the columns of ``vectors`` (column-pivoted QR)."""
        v = np.atleast_2d(np.asarray(vectors, dtype=complex))
        if v.shape[1] == 0:
            return cls(np.zeros((v.shape[0], 0), complex))
        s = np.linalg.svd(v, compute_uv=False)
        if s[-1] <= rank_tol * max(s[0], 1e-300):
            raise np.linalg.LinAlgError(
                f"frame is rank deficient (min singular value {s[-1]:.3e})")
        q, _, _ = scipy.linalg.qr(v, mode="economic", pivoting=True)
        return cls.from_projector(q @ q.conj().T, v.shape[1])

    @classmethod
    def from_projector(cls, projector: np.ndarray, dim: int) -> "Subspace":
        """Deterministic frame depending on the projector only."""
        p = np.asarray(projector, dtype=complex)
        n = p.shape[0]
        if dim == 0:
            return cls(np.zeros((n, 0), complex))
        q, _, _ = scipy.linalg.qr(p, pivoting=True)
        return cls(_canonical_phase(q[:, :dim]))

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls(np.zeros((n, 0), complex))

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(np.eye(n, dtype=complex))

    @property
    def ambient(self) -> int:
        return self.frame.shape[0]

    @property
    def dim(self) -> int:
        return self.frame.shape[1]

    @property
    def codim(self) -> int:
        return self.ambient - self.dim

    def projector(self) -> np.ndarray:
        return self.frame @ self.frame.conj().T

    def orthogonal_complement(self) -> "Subspace":
        return Subspace.from_projector(np.eye(self.ambient) - self.projector(), self.codim)

    def __repr__(self):
        return f"Subspace(ambient={self.ambient}, dim={self.dim})"


def principal_angles(a: Subspace | np.ndarray, b: Subspace | np.ndarray) -> np.ndarray:
    """Principal angles between two subspaces, largest first.

    Subspaces of different dimension are reported as a single angle of ``inf``.
    """
    fa = a.frame if isinstance(a, Subspace) else np.asarray(a, complex)
    fb = b.frame if isinstance(b, Subspace) else np.asarray(b, complex)
    if fa.shape[1] != fb.shape[1]:
        return np.array([np.inf])
    if fa.shape[1] == 0:
        return np.zeros(0)
    return scipy.linalg.subspace_angles(fa, fb)


def max_angle(a, b) -> float:
    ang = principal_angles(a, b)
    return float(ang.max()) if ang.size else 0.0


@dataclass(frozen=True, eq=False)
class MatrixLaurentPoly:
    """``Σ_{k=kmin}^{kmax} T_k λ^k`` with ``coeffs[k - kmin] = T_k``."""

    kmin: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 3 or c.shape[1] != c.shape[2]:
            raise ValueError("coeffs must have shape (K, n, n)")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite coefficient")
        kmin = int(self.kmin)
        if c.shape[0]:
            mags = np.abs(c).reshape(c.shape[0], -1).max(axis=1)
            keep = np.flatnonzero(mags >= TRIM_TOL * mags.max()) if mags.max() > 0 else []
            if len(keep) == 0:
                c = c[:0]
                kmin = 0
            else:
                kmin += int(keep[0])
                c = c[keep[0]:keep[-1] + 1]
        else:
            kmin = 0
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "kmin", kmin)

    # constructors
    @classmethod
    def constant(cls, matrix) -> "MatrixLaurentPoly":
        m = np.asarray(matrix, dtype=complex)
        return cls(0, m[None])

    @classmethod
    def identity(cls, n: int) -> "MatrixLaurentPoly":
        return cls.constant(np.eye(n))

    @classmethod
    def from_polynomial(cls, coeffs) -> "MatrixLaurentPoly":
        return cls(0, np.asarray(coeffs, dtype=complex))

    @property
    def n(self) -> int:
        return self.coeffs.shape[1]

    @property
    def kmax(self) -> int:
        return self.kmin + self.coeffs.shape[0] - 1

    @property
    def is_zero(self) -> bool:
        return self.coeffs.shape[0] == 0

    @property
    def is_polynomial(self) -> bool:
        return self.kmin >= 0

    @property
    def degree(self) -> int:
        """Highest exponent (``-1`` for the zero loop)."""
        return -1 if self.is_zero else self.kmax

    def coefficient(self, k: int) -> np.ndarray:
        idx = k - self.kmin
        if self.is_zero or idx < 0 or idx >= self.coeffs.shape[0]:
            return np.zeros((self.n, self.n), complex)
        return self.coeffs[idx]

    def polynomial_coeffs(self, length: int | None = None) -> np.ndarray:
        """Coefficients ``T_0 .. T_{length-1}`` of a polynomial loop, zero padded."""
        if not self.is_polynomial:
            raise ValueError("loop has negative exponents")
        length = self.degree + 1 if length is None else length
        out = np.zeros((length, self.n, self.n), complex)
        for k in range(max(self.kmin, 0), min(self.degree + 1, length)):
            out[k] = self.coefficient(k)
        return out

    def __call__(self, lam) -> np.ndarray:
        return evaluate(self, lam)

    def __matmul__(self, other: "MatrixLaurentPoly") -> "MatrixLaurentPoly":
        return multiply(self, other)

    def __repr__(self):
        return f"MatrixLaurentPoly(n={self.n}, exponents={self.kmin}..{self.kmax})"


def bp_factor(alpha: Subspace) -> MatrixLaurentPoly:
    """The Blaschke-Potapov factor ``π_α + λ π_α^⊥``."""
    p = alpha.projector()
    return MatrixLaurentPoly(0, np.stack([p, np.eye(alpha.ambient) - p]))


def bp_product(alphas) -> MatrixLaurentPoly:
    alphas = list(alphas)
    if not alphas:
        raise ValueError("need at least one subspace")
    out = MatrixLaurentPoly.identity(alphas[0].ambient)
    for a in alphas:
        out = multiply(out, bp_factor(a))
    return out


def evaluate(loop: MatrixLaurentPoly, lam) -> np.ndarray:
    """Horner evaluation; ``lam`` may be a scalar or an array of points."""
    lam_arr = np.asarray(lam, dtype=complex)
    if loop.kmin < 0 and np.any(lam_arr == 0):
        raise ZeroDivisionError("loop has negative exponents; cannot evaluate at 0")
    out = np.zeros(lam_arr.shape + (loop.n, loop.n), complex)
    x = lam_arr[..., None, None]
    for c in loop.coeffs[::-1]:
        out = out * x + c
    if loop.kmin:
        out = out * x ** loop.kmin
    return out


def multiply(a: MatrixLaurentPoly, b: MatrixLaurentPoly) -> MatrixLaurentPoly:
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n}")
    if a.is_zero or b.is_zero:
        return MatrixLaurentPoly(0, np.zeros((0, a.n, a.n)))
    out = np.zeros((a.coeffs.shape[0] + b.coeffs.shape[0] - 1, a.n, a.n), complex)
    for i, ca in enumerate(a.coeffs):
        out[i:i + b.coeffs.shape[0]] += ca @ b.coeffs
    return MatrixLaurentPoly(a.kmin + b.kmin, out)


def circle_adjoint(loop: MatrixLaurentPoly) -> MatrixLaurentPoly:
    """Pointwise adjoint on |λ| = 1: ``T_k ↦ T_{-k}^H``."""
    if loop.is_zero:
        return loop
    c = np.conj(np.swapaxes(loop.coeffs[::-1], 1, 2))
    return MatrixLaurentPoly(-loop.kmax, c)


def determinant(loop: MatrixLaurentPoly) -> MatrixLaurentPoly:
    """Determinant as a 1x1 Laurent polynomial, by sampling and FFT interpolation."""
    if loop.is_zero:
        return MatrixLaurentPoly(0, np.zeros((0, 1, 1)))
    span = loop.n * (loop.kmax - loop.kmin)
    samples = 1 << int(np.ceil(np.log2(span + 1))) if span else 1
    lam = unit_circle(samples)
    shifted = MatrixLaurentPoly(0, loop.coeffs)
    dets = np.linalg.det(evaluate(shifted, lam))
    coeffs = np.fft.fft(dets) / samples
    coeffs = coeffs[:span + 1]
    # absolute floor: determinant of an O(1) loop
    scale = max(np.abs(coeffs).max(), 1.0)
    coeffs = np.where(np.abs(coeffs) < 1e-11 * scale, 0, coeffs)
    return MatrixLaurentPoly(loop.n * loop.kmin, coeffs[:, None, None])


def substitute_scale(loop: MatrixLaurentPoly, mu: complex) -> MatrixLaurentPoly:
    """The loop ``λ ↦ L(μλ)``."""
    mu = complex(mu)
    if mu == 0:
        if loop.kmin < 0:
            raise ZeroDivisionError("cannot substitute μ=0 into negative exponents")
        return MatrixLaurentPoly.constant(loop.coefficient(0))
    if loop.is_zero:
        return loop
    k = np.arange(loop.kmin, loop.kmax + 1)
    return MatrixLaurentPoly(loop.kmin, loop.coeffs * (mu ** k)[:, None, None])


def normalized(loop: MatrixLaurentPoly) -> MatrixLaurentPoly:
    """Right-multiply by ``L(1)^{-1}`` so that the value at λ=1 is the identity."""
    g = np.linalg.inv(evaluate(loop, 1.0))
    return multiply(loop, MatrixLaurentPoly.constant(g))


def unitarity_defect(loop: MatrixLaurentPoly, samples: int = 64) -> float:
    """``max_{|λ|=1} ||L(λ)^H L(λ) - I||_2`` over equispaced samples."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    vals = evaluate(loop, unit_circle(samples, 0.5 / samples))
    dev = np.conj(np.swapaxes(vals, -1, -2)) @ vals - np.eye(loop.n)
    return float(np.linalg.norm(dev, ord=2, axis=(-2, -1)).max())


def sup_distance(a: MatrixLaurentPoly, b: MatrixLaurentPoly, samples: int = 64) -> float:
    lam = unit_circle(samples, 0.25)
    return float(np.linalg.norm(evaluate(a, lam) - evaluate(b, lam), ord=2, axis=(-2, -1)).max())
