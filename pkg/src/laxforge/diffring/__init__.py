"""Differential polynomial ring over Q(i, sqrt7) with spectral and nonlocal factors."""

from .operators import Operator, operator_text
from .poly import (
    ONE_POLY,
    ZERO_POLY,
    DiffPoly,
    FieldVar,
    NonlocalFactor,
    canonicalize,
    const,
    ddx,
    dinv,
    euler_derivative,
    is_total_derivative,
    nonlocal_raw,
    q,
    r,
    substitute,
    theta,
    variational_gradient,
    zero_components,
)
from .textio import ParseError, parse_diffpoly, to_latex, to_text

__all__ = [
    "DiffPoly", "FieldVar", "NonlocalFactor", "Operator", "operator_text",
    "ONE_POLY", "ZERO_POLY", "canonicalize", "const", "ddx", "dinv",
    "euler_derivative", "is_total_derivative", "nonlocal_raw", "q", "r",
    "substitute", "theta", "variational_gradient", "zero_components",
    "ParseError", "parse_diffpoly", "to_latex", "to_text",
]
