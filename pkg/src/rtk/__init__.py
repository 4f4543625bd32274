"""Riccati tensor equations and multilinear control under the Einstein product."""
from ._kernels import BACKEND
from .errors import (
    ConvergenceFailure,
    ParseError,
    PreconditionError,
    RTKError,
    ShapeMismatch,
    ValidationError,
)
from .tensor import PairedTensor, PlainTensor, Shape, einstein_product

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConvergenceFailure",
    "PairedTensor",
    "ParseError",
    "PlainTensor",
    "PreconditionError",
    "RTKError",
    "Shape",
    "ShapeMismatch",
    "ValidationError",
    "einstein_product",
]
