"""Example 1: a 3x2 multilinear system with published Riccati results."""
from __future__ import annotations

from importlib import resources

import numpy as np

from .control import MltiSystem
from .equations import ArteProblem
from .tensor import PairedTensor, Shape

A1 = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.2, 0.5, 0.8]])
A2 = np.array([[0.0, 1.0], [0.5, 0.0]])
B1 = np.array([[0.0], [0.0], [1.0]])
B2 = np.array([[0.0], [1.0]])
C1 = np.array([[1.0, 0.0, 0.0]])
C2 = np.array([[1.0, 0.0]])

SHAPE = Shape((3, 2), (3, 2))

# E0 slices, keyed by the trailing index pair (i2, j2)
E0_SLICES = {
    (1, 1): np.diag([10.0, 4.0, 13.0]),
    (2, 1): np.array([[0.0, 0, 0], [0, 0, 0], [1, 0, 5]]),
    (1, 2): np.array([[0.0, 0, 1], [0, 0, 0], [0, 0, 5]]),
    (2, 2): np.array([[7.0, 0, 1], [0, 21, 5], [1, 5, 4]]),
}

# published solution slices (four decimals)
E_SLICES = {
    (1, 1): np.array([[4.8082, -0.2001, 3.9671], [-0.2001, 1.5958, -3.3882], [3.9671, -3.3882, 18.7381]]),
    (2, 1): np.array([[-0.5391, -0.0033, 1.5582], [10.0971, -4.2223, 25.4769], [1.1050, 0.0067, 5.4633]]),
    (1, 2): np.array([[-0.5391, 10.0971, 1.1050], [-0.0033, -4.2223, 0.0067], [1.5582, 25.4769, 5.4633]]),
    (2, 2): np.array([[0.9711, 0.4996, 0.7895], [0.4996, 41.7634, 6.7580], [0.7895, 6.7580, 2.9588]]),
}

RESIDUAL = 6.9709e-7
PSD_MIN = 0.0063
CLOSED_LOOP = np.array([
    -1.0165 + 0.1846j, -1.0165 - 0.1846j,
    -0.4144 + 0.4918j, -0.4144 - 0.4918j,
    -0.0485 + 0.3339j, -0.0485 - 0.3339j,
])
KAPPA = (55.0299, 75.4538, 123.7297)
TABLE1_DELTAS = (1e-8, 2e-7, 3e-6)
TABLE1_BOUNDS = (
    (9.5314e-7, 7.5453e-7, 1.2373e-6),
    (1.9062e-5, 1.5090e-5, 2.4747e-5),
    (2.8594e-4, 2.2636e-4, 3.7121e-4),
)
TABLE1_OBSERVED = (4.0547e-8, 2.2174e-6, 3.4478e-5)
NEWTON_OPTIONS = {"eps": 1e-6, "inner": "bicg-tensor", "inner_tol": 1e-4, "max_iter": 50}


def from_slices(slices: dict) -> PairedTensor:
    """Assemble a 3x3x2x2 tensor from its ``[:, :, i2, j2]`` slices."""
    arr = np.zeros((3, 3, 2, 2), dtype=complex)
    for (a, b), m in slices.items():
        arr[:, :, a - 1, b - 1] = m
    return PairedTensor.from_interleaved(arr)


def slice_of(e: PairedTensor, a: int, b: int) -> np.ndarray:
    return e.interleaved()[:, :, a - 1, b - 1]


def example1_system() -> MltiSystem:
    return MltiSystem(
        PairedTensor.outer(A1, A2), PairedTensor.outer(B1, B2), PairedTensor.outer(C1, C2)
    )


def example1_problem() -> ArteProblem:
    s = example1_system()
    return ArteProblem.from_factors(s.A, s.B, s.C)


def example1_e0() -> PairedTensor:
    return from_slices(E0_SLICES)


def example1_published_e() -> PairedTensor:
    return from_slices(E_SLICES)


def fixture_bytes() -> bytes:
    """The shipped Example 1 problem document."""
    return resources.files("rtk").joinpath("data/example1.json").read_bytes()


def fixture_document():
    from .io import ProblemDocument
    from .structured import GcpdTensor

    return ProblemDocument(
        "arte",
        {
            "A": GcpdTensor.rank_one(A1, A2),
            "B": GcpdTensor.rank_one(B1, B2),
            "C": GcpdTensor.rank_one(C1, C2),
            "E0": example1_e0(),
        },
        {"method": "newton", **NEWTON_OPTIONS},
    )
