"""Conservation laws of PDE systems via nonlinear self-adjointness."""

from .conslaw import (
    ConservedVector,
    GaugeTriple,
    conserved_vector,
    divergence,
    gauge_transform,
    kp_closed_form,
    simplify_density,
    verify_divergence,
)
from .diffalg import (
    DiffPoly,
    IndexConvention,
    SubstitutionRule,
    euler,
    evaluate,
    partial_jet,
    substitute,
    total_derivative,
)
from .parser import parse_expression, parse_generator, parse_system, render
from .selfadjoint import adjoint_system, check_selfadjointness, formal_lagrangian
from .symmetry import Generator, builtin_kp_generator, characteristic, check_symmetry
from .system import SystemSpec, reduce_modulo

__version__ = "0.1.0"

__all__ = [
    "ConservedVector",
    "DiffPoly",
    "GaugeTriple",
    "Generator",
    "IndexConvention",
    "SubstitutionRule",
    "SystemSpec",
    "adjoint_system",
    "builtin_kp_generator",
    "characteristic",
    "check_selfadjointness",
    "check_symmetry",
    "conserved_vector",
    "divergence",
    "euler",
    "evaluate",
    "formal_lagrangian",
    "gauge_transform",
    "kp_closed_form",
    "parse_expression",
    "parse_generator",
    "parse_system",
    "partial_jet",
    "reduce_modulo",
    "render",
    "simplify_density",
    "substitute",
    "total_derivative",
    "verify_divergence",
]
