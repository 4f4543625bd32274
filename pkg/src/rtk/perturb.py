"""First-order perturbation bounds and condition numbers for the Riccati tensor equation.

With ``A_c = A - G * E`` stable, the linearized perturbation equation reads
``Z * vec(dE) = -(E^T (x) I) * vec(dA^H) - (I (x) E) * vec(dA)
+ (E^T (x) E) * vec(dG) - vec(dK)`` where ``Z = I (x) A_c^H + A_c^T (x) I``.
For Hermitian ``E`` the factor ``E^T`` is ``conj(E)``; for real ``E`` it is ``E``.

The reported condition numbers are the theorem's upper bounds (``kappa_upper``),
not the limit-supremum values themselves.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
import io
import math
from typing import Sequence

import numpy as np

from .equations import ArteProblem, newton_arte
from .errors import ConvergenceFailure, PreconditionError, RTKError, UnstableClosedLoop, ValidationError
from .spectral import u_eigenvalues
from .structured import kron, transpose_permutation_tensor, unvec, vec
from .tensor import PairedTensor, PlainTensor, conj_transpose, einstein_product, frobenius_norm, transpose

CSV_COLUMNS = ("delta", "trial", "dE_norm", "delta1", "delta2", "delta3", "ratio1", "ratio2", "ratio3")

EXAMPLE1_DELTAS = tuple(1e-8 * j for j in range(1, 100))


@dataclass(frozen=True)
class PerturbConfig:
    """Options for condition numbers and randomized perturbation runs.

    ``g_index`` and ``k_index`` are 1-based interleaved positions
    ``(i1, j1, ..., iN, jN)`` of the single perturbed entry of G and K.
    """

    alpha: float = math.sqrt(2.0)
    beta: float = math.sqrt(2.0)
    real_delta_A: bool = True
    delta_scales: tuple[float, ...] = EXAMPLE1_DELTAS
    g_index: tuple[int, ...] = (1, 1, 1, 1)
    k_index: tuple[int, ...] = (3, 3, 2, 2)
    eps: float = 1e-12
    max_iter: int = 50

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValidationError("alpha and beta must be positive", field="alpha")
        if abs(1 / self.alpha**2 + 1 / self.beta**2 - 1) > 1e-12:
            raise ValidationError(
                f"1/alpha^2 + 1/beta^2 must equal 1 (alpha={self.alpha}, beta={self.beta})", field="alpha"
            )
        object.__setattr__(self, "delta_scales", tuple(float(d) for d in self.delta_scales))


@dataclass(frozen=True)
class ConditionNumbers:
    kappa1: float
    kappa2: float
    kappa3: float
    eta_c: float


@dataclass
class Sample:
    delta: float
    trial: int
    dE_norm: float
    delta1: float
    delta2: float
    delta3: float
    ratio1: float
    ratio2: float
    ratio3: float
    rel_error: float
    bound: float
    error: str | None = None


@dataclass
class PerturbReport:
    Z: PairedTensor
    kappa: ConditionNumbers
    bound_first_order: float
    seed: int
    samples: list[Sample] = field(default_factory=list)

    @property
    def kappa1(self) -> float:
        return self.kappa.kappa1

    @property
    def kappa2(self) -> float:
        return self.kappa.kappa2

    @property
    def kappa3(self) -> float:
        return self.kappa.kappa3

    @property
    def eta_c(self) -> float:
        return self.kappa.eta_c

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for s in self.samples:
            w.writerow([repr(float(getattr(s, c))) if c != "trial" else s.trial for c in CSV_COLUMNS])
        return buf.getvalue()


# building blocks ----------------------------------------------------------------

def _eye(problem: ArteProblem) -> PairedTensor:
    return PairedTensor.identity(problem.shape.row_dims)


def z_tensor(problem: ArteProblem, e: PairedTensor) -> PairedTensor:
    """``Z = I (x) A_c^H + A_c^T (x) I`` with the closed loop ``A_c = A - G * E``."""
    ac = problem.closed_loop(e)
    lam = u_eigenvalues(ac)
    if np.any(lam.real >= 0):
        raise UnstableClosedLoop(f"A - G*E is not stable (max real part {lam.real.max():.3e})")
    eye = _eye(problem)
    return kron(eye, conj_transpose(ac)) + kron(transpose(ac), eye)


@dataclass(frozen=True)
class _Operators:
    zinv: np.ndarray
    left_a: np.ndarray  # I (x) E, acting on vec(dA)
    right_a: np.ndarray  # E^T (x) I, acting on vec(dA^H)
    real_a: np.ndarray  # I (x) E + (E^T (x) I) * P, acting on vec(dA) for real dA
    gg: np.ndarray  # E^T (x) E
    z: PairedTensor


def _operators(problem: ArteProblem, e: PairedTensor) -> _Operators:
    z = z_tensor(problem, e)
    eye = _eye(problem)
    left = kron(eye, e)
    right = kron(transpose(e), eye)
    p = transpose_permutation_tensor(problem.shape.row_dims)
    real = left + einstein_product(right, p)
    zinv = np.linalg.inv(z.unfold())
    return _Operators(zinv, left.unfold(), right.unfold(), real.unfold(), kron(transpose(e), e).unfold(), z)


def _norm2(m: np.ndarray) -> float:
    return float(np.linalg.norm(m, 2))


def first_order_bound(
    problem: ArteProblem,
    e: PairedTensor,
    da: PairedTensor,
    dg: PairedTensor,
    dk: PairedTensor,
    real_delta_A: bool = False,
    _ops: _Operators | None = None,
) -> float:
    """First-order upper bound on ``||dE||_F``."""
    ops = _ops or _operators(problem, e)
    zi = ops.zinv
    if real_delta_A:
        ca = _norm2(zi @ ops.real_a)
    else:
        ca = _norm2(zi @ ops.left_a) + _norm2(zi @ ops.right_a)
    return (
        ca * frobenius_norm(da)
        + _norm2(zi @ ops.gg) * frobenius_norm(dg)
        + _norm2(zi) * frobenius_norm(dk)
    )


def condition_numbers(problem: ArteProblem, e: PairedTensor, config: PerturbConfig | None = None,
                      _ops: _Operators | None = None) -> ConditionNumbers:
    """Upper bounds for the three normwise condition numbers."""
    config = config or PerturbConfig()
    ops = _ops or _operators(problem, e)
    zi = ops.zinv
    na, ng, nk, ne = (frobenius_norm(t) for t in (problem.A, problem.G, problem.K, e))
    if ne == 0.0:
        raise PreconditionError("condition numbers are undefined for E = O")
    ident = np.eye(zi.shape[0])
    if config.real_delta_A:
        s1 = np.hstack([na * ops.real_a, ng * ops.gg, nk * ident])
        s2 = np.hstack([ops.real_a, ops.gg, ident])
        eta = _norm2(zi @ ops.real_a) * na
    else:
        a, b = config.alpha, config.beta
        s1 = np.hstack([a * na * ops.right_a, b * na * ops.left_a, ng * ops.gg, nk * ident])
        s2 = np.hstack([a * ops.right_a, b * ops.left_a, ops.gg, ident])
        eta = (_norm2(zi @ ops.left_a) + _norm2(zi @ ops.right_a)) * na
    eta += _norm2(zi @ ops.gg) * ng + _norm2(zi) * nk
    k1 = _norm2(zi @ s1) / ne
    k2 = min(math.sqrt(3.0) * k1, eta / ne)
    k3 = _norm2(zi @ s2) * math.sqrt(na**2 + ng**2 + nk**2) / ne
    return ConditionNumbers(k1, k2, k3, eta)


def linearized_delta(problem: ArteProblem, e: PairedTensor, da, dg, dk) -> PairedTensor:
    """Solution of the linearized perturbation equation (first-order ``dE``)."""
    z = z_tensor(problem, e)
    rhs = -(
        einstein_product(conj_transpose(da), e)
        + einstein_product(e, da)
        - einstein_product(einstein_product(e, dg), e)
        + dk
    )
    # Z * vec(dE) = vec(rhs)
    x = np.linalg.solve(z.unfold(), vec(rhs).data)
    return unvec(PlainTensor(x, z.shape.col_dims), problem.shape)


def relative_errors(problem: ArteProblem, da, dg, dk) -> tuple[float, float, float]:
    """``(Delta_1, Delta_2, Delta_3)`` for a perturbation triple."""
    norms = [frobenius_norm(t) for t in (problem.A, problem.G, problem.K)]
    dnorms = [frobenius_norm(t) for t in (da, dg, dk)]
    rel = [d / n if n > 0 else (0.0 if d == 0 else math.inf) for d, n in zip(dnorms, norms)]
    d1 = math.sqrt(sum(r * r for r in rel))
    d2 = max(rel)
    d3 = math.sqrt(sum(d * d for d in dnorms)) / math.sqrt(sum(n * n for n in norms))
    return d1, d2, d3


# randomized experiments -----------------------------------------------------------

def _stream(seed: int, trial: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, trial, index])))


def box_muller(rng: np.random.Generator, size: int) -> np.ndarray:
    """Standard normals from pairs of uniforms."""
    m = (size + 1) // 2
    u1 = 1.0 - rng.random(m)  # in (0, 1]
    u2 = rng.random(m)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
    return z[:size]


def _unit_entry(problem: ArteProblem, index: Sequence[int], value: float) -> PairedTensor:
    n = problem.shape.order
    if len(index) != 2 * n:
        raise ValidationError(f"perturbation index {tuple(index)} needs {2 * n} entries", field="index")
    arr = np.zeros(problem.shape.interleaved, dtype=complex)
    try:
        arr[tuple(i - 1 for i in index)] = value
    except IndexError:
        raise ValidationError(f"perturbation index {tuple(index)} out of range {problem.shape.interleaved}",
                              field="index") from None
    if any(i < 1 for i in index):
        raise ValidationError(f"perturbation index {tuple(index)} must be 1-based", field="index")
    return PairedTensor.from_interleaved(arr)


def draw_perturbation(problem: ArteProblem, delta: float, config: PerturbConfig, rng: np.random.Generator):
    """``(dA, dG, dK)`` with ``||dA||_F = delta ||A||_F`` and single-entry ``dG``, ``dK``."""
    size = problem.shape.n_rows * problem.shape.n_cols
    raw = box_muller(rng, size)
    if not config.real_delta_A:
        raw = raw + 1j * box_muller(rng, size)
    da_t = PairedTensor(raw, problem.shape)
    na = frobenius_norm(problem.A)
    da = (delta * na / frobenius_norm(da_t)) * da_t if delta != 0 else 0 * da_t
    dg = _unit_entry(problem, config.g_index, delta)
    dk = _unit_entry(problem, config.k_index, delta)
    return da, dg, dk


def random_perturbation_suite(
    problem: ArteProblem,
    e: PairedTensor,
    config: PerturbConfig | None = None,
    trials: int = 3,
    seed: int = 0,
) -> PerturbReport:
    """Re-solve randomly perturbed problems and compare with the bounds.

    Each ``(trial, delta index)`` pair owns its random stream, so results do
    not depend on iteration order. Failed solves are recorded, not raised.
    """
    config = config or PerturbConfig()
    ops = _operators(problem, e)
    kap = condition_numbers(problem, e, config, ops)
    ne = frobenius_norm(e)
    samples: list[Sample] = []
    worst_bound = 0.0
    for trial in range(trials):
        for idx, delta in enumerate(config.delta_scales):
            rng = _stream(seed, trial, idx)
            da, dg, dk = draw_perturbation(problem, delta, config, rng)
            d1, d2, d3 = relative_errors(problem, da, dg, dk)
            bound = first_order_bound(problem, e, da, dg, dk, config.real_delta_A, ops)
            worst_bound = max(worst_bound, bound)
            err = None
            if delta == 0:
                dnorm = 0.0
            else:
                try:
                    pert = ArteProblem(problem.A + da, problem.G + dg, problem.K + dk)
                    rep = newton_arte(pert, e, inner="direct", eps=config.eps, max_iter=config.max_iter,
                                      warn_unstable=False)
                    dnorm = frobenius_norm(rep.E - e)
                except (ConvergenceFailure, RTKError) as exc:
                    dnorm = math.nan
                    err = str(exc)
            ratios = [dnorm / (d * ne) if d > 0 else 0.0 for d in (d1, d2, d3)]
            samples.append(Sample(delta, trial, dnorm, d1, d2, d3, *ratios, dnorm / ne, bound, err))
    return PerturbReport(ops.z, kap, worst_bound, seed, samples)
