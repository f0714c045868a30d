"""Uniton factorizations of polynomial extended solutions and their deformation to S¹-invariant limits."""

from .deformation import DeformationFamily, deform_loop, deform_unitons
from .factorization import Factorization, factorize_segal, verify_product
from .grassmann import ComplementSpace, complement_basis, degree_graded_basis
from .looppoly import MatrixLaurentPoly, Subspace, bp_factor, bp_product

__version__ = "0.1.0"

__all__ = [
    "DeformationFamily", "deform_loop", "deform_unitons",
    "Factorization", "factorize_segal", "verify_product",
    "ComplementSpace", "complement_basis", "degree_graded_basis",
    "MatrixLaurentPoly", "Subspace", "bp_factor", "bp_product",
]
