"""Loop fields on a square grid in the z-plane and the residuals of the field equations.

Arrays are laid out with the x index on axis 0 and the y index on axis 1.
Derivatives use ``∂_z = (∂_x - i∂_y)/2`` and ``∂_z̄ = (∂_x + i∂_y)/2`` with
second-order differences; every residual maximum skips the outer grid ring.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .deformation import DeformationError, DeformationFamily, deform_unitons, gram_matrix, normalized_det
from .factorization import Factorization, factorize_segal, verify_product
from .grassmann import complement_basis
from .looppoly import MatrixLaurentPoly, Subspace, unit_circle, unitarity_defect


@dataclass(frozen=True)
class GridDomain:
    xmin: float = -1.0
    xmax: float = 1.0
    ymin: float = -1.0
    ymax: float = 1.0
    nx: int = 33
    ny: int = 33

    def __post_init__(self):
        if self.nx < 5 or self.ny < 5:
            raise ValueError("grid needs at least 5 points per direction")
        hx = (self.xmax - self.xmin) / (self.nx - 1)
        hy = (self.ymax - self.ymin) / (self.ny - 1)
        if hx <= 0 or abs(hx - hy) > 1e-12 * max(hx, hy):
            raise ValueError(f"grid spacing must be uniform and positive (hx={hx}, hy={hy})")

    @property
    def h(self) -> float:
        return (self.xmax - self.xmin) / (self.nx - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def z(self) -> np.ndarray:
        x = np.linspace(self.xmin, self.xmax, self.nx)
        y = np.linspace(self.ymin, self.ymax, self.ny)
        return x[:, None] + 1j * y[None, :]

    def refined(self) -> "GridDomain":
        """Same rectangle with half the spacing."""
        return GridDomain(self.xmin, self.xmax, self.ymin, self.ymax, 2 * self.nx - 1, 2 * self.ny - 1)


def interior(a: np.ndarray, ring: int = 1) -> np.ndarray:
    return a[ring:-ring, ring:-ring]


def fd_derivative(values: np.ndarray, h: float, which: str = "z") -> np.ndarray:
    """Wirtinger derivative of a gridded array (extra trailing axes allowed)."""
    dx = np.gradient(values, h, axis=0, edge_order=2)
    dy = np.gradient(values, h, axis=1, edge_order=2)
    if which == "z":
        return 0.5 * (dx - 1j * dy)
    if which in ("zbar", "z̄"):
        return 0.5 * (dx + 1j * dy)
    raise ValueError(f"unknown derivative {which!r}")


def _dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def _opnorm(a: np.ndarray) -> np.ndarray:
    if a.shape[-1] == 0 or a.shape[-2] == 0:
        return np.zeros(a.shape[:-2])
    return np.linalg.norm(a, ord=2, axis=(-2, -1))


@dataclass(frozen=True, eq=False)
class BundleField:
    """A subbundle of the trivial C^n bundle, held by its orthogonal projectors."""

    grid: GridDomain
    projectors: np.ndarray
    dim: int

    @property
    def n(self) -> int:
        return self.projectors.shape[-1]

    def subspace(self, i: int, j: int) -> Subspace:
        return Subspace.from_projector(self.projectors[i, j], self.dim)


@dataclass(frozen=True, eq=False)
class LoopField:
    """Polynomial loops ``Σ_k T_k(z) λ^k`` sampled on a grid; ``coeffs`` is ``(nx, ny, K, n, n)``."""

    grid: GridDomain
    coeffs: np.ndarray

    @property
    def n(self) -> int:
        return self.coeffs.shape[-1]

    @property
    def degree(self) -> int:
        return self.coeffs.shape[2] - 1

    @classmethod
    def from_loops(cls, grid: GridDomain, loops) -> "LoopField":
        """``loops`` is a nested ``nx x ny`` list of polynomial loops."""
        deg = max(l.degree for row in loops for l in row)
        c = np.stack([np.stack([l.polynomial_coeffs(deg + 1) for l in row]) for row in loops])
        return cls(grid, c)

    def at(self, i: int, j: int) -> MatrixLaurentPoly:
        return MatrixLaurentPoly(0, self.coeffs[i, j])

    def values(self, lam) -> np.ndarray:
        """Evaluate at the points ``lam`` (1-d); result ``(nx, ny, len(lam), n, n)``."""
        return _eval_coeffs(self.coeffs, np.atleast_1d(np.asarray(lam, complex)))

    def phi(self) -> np.ndarray:
        """The map ``Φ(-1, ·)`` as a ``(nx, ny, n, n)`` array."""
        return self.values([-1.0])[:, :, 0]

    def unitarity_defect(self, samples: int = 64) -> float:
        v = self.values(unit_circle(samples, 0.5 / samples))
        return float(interior(_opnorm(_dagger(v) @ v - np.eye(self.n))).max())

    def normalization_defect(self) -> float:
        return float(np.abs(self.values([1.0])[:, :, 0] - np.eye(self.n)).max())


def _eval_coeffs(coeffs: np.ndarray, lam: np.ndarray) -> np.ndarray:
    out = np.zeros(coeffs.shape[:2] + (lam.size,) + coeffs.shape[3:], complex)
    for k in range(coeffs.shape[2] - 1, -1, -1):
        out = out * lam[:, None, None] + coeffs[:, :, k][:, :, None]
    return out


def _batched_product(projectors) -> np.ndarray:
    """Coefficients of ``Π_j (P_j + λ(I - P_j))`` over a grid."""
    p0 = projectors[0]
    n = p0.shape[-1]
    eye = np.broadcast_to(np.eye(n), p0.shape)
    coeffs = eye[:, :, None].copy()
    for p in projectors:
        new = np.zeros(coeffs.shape[:2] + (coeffs.shape[2] + 1, n, n), complex)
        new[:, :, :-1] += coeffs @ p[:, :, None]
        new[:, :, 1:] += coeffs @ (eye - p)[:, :, None]
        coeffs = new
    return coeffs


def frame_projectors(columns, grid: GridDomain, rank_tol: float = 1e-8) -> tuple[np.ndarray, int]:
    """Projectors onto the span of callable frame columns evaluated on the grid.

    ``columns`` is a list of columns, each a list of ``n`` callables of ``z``.
    """
    z = grid.z
    cols = []
    for col in columns:
        cols.append(np.stack([np.broadcast_to(np.asarray(f(z), complex), z.shape) for f in col], axis=-1))
    frame = np.stack(cols, axis=-1)
    s = np.linalg.svd(frame, compute_uv=False)
    smin = s[..., -1] / np.maximum(s[..., 0], 1e-300)
    bad = np.argwhere(smin <= rank_tol)
    if bad.size:
        i, j = bad[0]
        raise np.linalg.LinAlgError(
            f"frame loses rank at grid point ({i}, {j}), z = {z[i, j]:.6g}")
    q, _ = np.linalg.qr(frame)
    return q @ _dagger(q), frame.shape[-1]


def build_loop_field(unitons, grid: GridDomain) -> tuple[LoopField, list[BundleField]]:
    """Pointwise ``Π_j (π_{α_j} + λ π_{α_j}^⊥)`` for frames given as callables."""
    bundles = []
    for cols in unitons:
        P, d = frame_projectors(cols, grid)
        bundles.append(BundleField(grid, P, d))
    coeffs = _batched_product([b.projectors for b in bundles])
    return LoopField(grid, coeffs), bundles


def _lambda_samples(degree: int) -> int:
    target = 4 * (degree + 1)
    return 1 << int(np.ceil(np.log2(target)))


def _log_derivative_modes(lf: LoopField, which: str, samples: int | None = None) -> np.ndarray:
    """Fourier modes of ``Φ^{-1} ∂Φ`` in λ; axis 2 indexes the mode modulo the sample count."""
    L = _lambda_samples(lf.degree) if samples is None else samples
    lam = unit_circle(L)
    vals = lf.values(lam)
    dvals = _eval_coeffs(fd_derivative(lf.coeffs, lf.grid.h, which), lam)
    M = _dagger(vals) @ dvals
    return np.fft.fft(M, axis=2) / L


@dataclass(frozen=True, eq=False)
class ConnectionCoeffs:
    A_z: np.ndarray
    A_zbar: np.ndarray
    residual: np.ndarray = field(repr=False)


def connection_coeffs(lf: LoopField, samples: int | None = None) -> ConnectionCoeffs:
    """Read ``A_z`` (mode 0 of ``Φ^{-1}∂_zΦ``) and ``A_z̄`` (mode 0 of ``Φ^{-1}∂_z̄Φ``).

    ``residual`` holds, per grid point, how far the two mode patterns are from
    ``(1 - λ^{-1}) A_z`` and ``(1 - λ) A_z̄``.
    """
    res = []
    out = []
    for which, partner in (("z", -1), ("zbar", 1)):
        modes = _log_derivative_modes(lf, which, samples)
        L = modes.shape[2]
        keep = {0, partner % L}
        others = [k for k in range(L) if k not in keep]
        stray = np.sqrt(np.sum(np.abs(modes[:, :, others]) ** 2, axis=(2, 3, 4)))
        mismatch = np.linalg.norm(modes[:, :, 0] + modes[:, :, partner % L], axis=(-2, -1))
        res.append(stray + mismatch)
        out.append(modes[:, :, 0])
    return ConnectionCoeffs(out[0], out[1], np.maximum(res[0], res[1]))


def extended_solution_residual(lf: LoopField) -> float:
    return float(interior(connection_coeffs(lf).residual).max())


def map_connection(phi: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """``A_z, A_z̄`` from ``½ φ^{-1} dφ`` for a gridded map ``φ``."""
    inv = np.linalg.inv(phi)
    return 0.5 * inv @ fd_derivative(phi, h, "z"), 0.5 * inv @ fd_derivative(phi, h, "zbar")


def harmonicity_residual(phi: np.ndarray, grid: GridDomain) -> float:
    """``max ||(A_z)_z̄ + (A_z̄)_z||_2`` over interior points.

    Differences are nested here, so edge errors reach one ring further in and
    a ring of width 2 is skipped.
    """
    a_z, a_zb = map_connection(phi, grid.h)
    defect = fd_derivative(a_z, grid.h, "zbar") + fd_derivative(a_zb, grid.h, "z")
    return float(interior(_opnorm(defect), ring=2).max())


def grassmann_residual(lf: LoopField) -> float:
    """Worst component of ``T∂_z f`` and ``∂_z̄ f`` orthogonal to ``W(z)`` over ``f = λ^j Φ e_i``."""
    n, K = lf.n, lf.coeffs.shape[2]
    m = K - 1
    if m <= 0:
        return 0.0
    dz = fd_derivative(lf.coeffs, lf.grid.h, "z")
    dzb = fd_derivative(lf.coeffs, lf.grid.h, "zbar")
    worst = 0.0
    nx, ny = lf.grid.shape
    for i in range(1, nx - 1):
        for j in range(1, ny - 1):
            Q = complement_basis(lf.at(i, j), check=False).orthonormal_matrix(m)
            if Q.shape[1] == 0:
                continue
            sections = []
            for shift_by, d in ((1, dz[i, j]), (0, dzb[i, j])):
                for jj in range(m):
                    # coefficients of λ^{jj+shift} dΦ e_i, truncated below degree m
                    v = np.zeros((m, n, n), complex)
                    s = jj + shift_by
                    if s < m:
                        take = min(K, m - s)
                        v[s:s + take] = d[:take]
                    sections.append(v.reshape(m * n, n))
            S = np.concatenate(sections, axis=1)
            worst = max(worst, float(np.abs(Q.conj().T @ S).max()))
    return worst


def s1_structure_residuals(bundles, grid: GridDomain | None = None) -> tuple[float, float, float]:
    """Nesting, ``∂_z α_j ⊂ α_{j+1}`` and ``∂_z̄ α_j ⊂ α_j`` defects (projector form)."""
    if not bundles:
        return (0.0, 0.0, 0.0)
    grid = bundles[0].grid if grid is None else grid
    n = bundles[0].n
    eye = np.eye(n)
    nest = dz = dzb = 0.0
    for j, b in enumerate(bundles):
        P = b.projectors
        Pb = fd_derivative(P, grid.h, "zbar")
        dzb = max(dzb, float(interior(_opnorm((eye - P) @ Pb @ P)).max()))
        if j + 1 < len(bundles):
            Q = eye - bundles[j + 1].projectors
            nest = max(nest, float(interior(_opnorm(Q @ P)).max()))
            Pz = fd_derivative(P, grid.h, "z")
            dz = max(dz, float(interior(_opnorm(Q @ Pz @ P)).max()))
    return (nest, dz, dzb)


@dataclass(frozen=True)
class ExponentReport:
    exponents: tuple | None
    fit_error: float

    @property
    def ok(self) -> bool:
        return self.exponents is not None


def spectrum_exponents(loop: MatrixLaurentPoly, samples: int = 16, tol: float = 1e-8) -> ExponentReport:
    """Integers ``k_i`` with ``Φ(λ) = U diag(λ^{k_i}) U^H`` for a fixed unitary ``U``."""
    deg = max(loop.degree, 0)
    theta0 = 2 * np.pi / (deg + 2)
    T, U = scipy.linalg.schur(loop(np.exp(1j * theta0)), output="complex")
    ang = np.mod(np.angle(np.diag(T)), 2 * np.pi) / theta0
    ks = np.rint(ang).astype(int)
    frac = float(np.abs(ang - ks).max()) * theta0
    ks = ks % (deg + 2)
    lam = unit_circle(samples, 0.21)
    diag = lam[:, None] ** ks[None, :]
    model = (U[None] * diag[:, None, :]) @ U.conj().T
    err = max(float(np.linalg.norm(loop(lam) - model, ord=2, axis=(-2, -1)).max()), frac)
    if err > tol:
        return ExponentReport(None, err)
    return ExponentReport(tuple(sorted(int(k) for k in ks)), err)


def field_exponents(lf: LoopField, samples: int = 16, tol: float = 1e-8) -> ExponentReport:
    """Exponents required to be the same at every grid point."""
    found = None
    worst = 0.0
    nx, ny = lf.grid.shape
    for i in range(nx):
        for j in range(ny):
            r = spectrum_exponents(lf.at(i, j), samples, tol)
            worst = max(worst, r.fit_error)
            if not r.ok or (found is not None and r.exponents != found):
                return ExponentReport(None, worst if r.ok else r.fit_error)
            found = r.exponents
    return ExponentReport(found, worst)


def field_families(lf: LoopField, bundles=None) -> list[list[DeformationFamily]]:
    """Per-point deformation families: Segal by default, the given unitons if ``bundles``."""
    nx, ny = lf.grid.shape
    fams = []
    for i in range(nx):
        row = []
        for j in range(ny):
            if bundles is None:
                row.append(DeformationFamily.segal(lf.at(i, j)))
            else:
                f = Factorization.from_subspaces([b.subspace(i, j) for b in bundles])
                row.append(DeformationFamily.from_factorization(f))
        fams.append(row)
    return fams


@dataclass(frozen=True, eq=False)
class DeformedField:
    mu: complex
    loops: LoopField
    bundles: list | None
    gram_det_min: float
    unitarity: float
    factor_error: float


def deform_field(lf: LoopField, mu: complex, families=None, bundles=None,
                 factor_check: bool = True) -> DeformedField:
    """Deform every grid point; factor bundles are kept when their ranks are constant."""
    families = field_families(lf, bundles) if families is None else families
    nx, ny = lf.grid.shape
    loops, facts = [], []
    gram_min, unit, ferr = np.inf, 0.0, 0.0
    for i in range(nx):
        lrow, frow = [], []
        for j in range(ny):
            fam = families[i][j]
            try:
                fac = deform_unitons(fam, mu)
            except (ValueError, np.linalg.LinAlgError) as exc:
                raise DeformationError(
                    f"μ={complex(mu)}, grid point ({i}, {j}), z={lf.grid.z[i, j]:.6g}: {exc}") from exc
            b = fac.product
            gram_min = min(gram_min, normalized_det(gram_matrix(fam, mu)))
            unit = max(unit, unitarity_defect(b))
            if factor_check:
                ferr = max(ferr, verify_product(factorize_segal(b), b))
            lrow.append(b)
            frow.append(fac)
        loops.append(lrow)
        facts.append(frow)
    field_ = LoopField.from_loops(lf.grid, loops)
    dims = {tuple(a.dim for a in f.factors) for row in facts for f in row}
    out_bundles = None
    if len(dims) == 1:
        (profile,) = dims
        out_bundles = []
        for k, d in enumerate(profile):
            P = np.stack([np.stack([f.factors[k].projector() for f in row]) for row in facts])
            out_bundles.append(BundleField(lf.grid, P, d))
    return DeformedField(complex(mu), field_, out_bundles, float(gram_min), unit, ferr)
