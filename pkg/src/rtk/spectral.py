"""Eigenstructure of paired tensors through the unfolding.

The complex Schur form comes from the kernels in ``rtk._kernels`` (compiled
when available). Singular value decompositions and Hermitian eigenvalues use
LAPACK through NumPy.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import _kernels
from .errors import (
    ConvergenceFailure,
    ImaginaryAxisEigenvalue,
    NotHermitian,
    NotHermitianBlocks,
    NotSymplectic,
    ShapeMismatch,
    SingularTensor,
)
from .tensor import (
    DEFAULT_TOL,
    PairedTensor,
    PlainTensor,
    Shape,
    block2x2,
    conj_transpose,
    einstein_product,
    frobenius_norm,
    hermitian_part,
    is_hermitian,
    shuffle_permutation,
    solve,
    split2x2,
    spectral_norm,
)


def schur_matrix(m, max_its: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Complex Schur form ``m = Z T Z^H`` of a square matrix."""
    t = np.array(m, dtype=complex, order="C")
    if t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise ShapeMismatch(f"Schur form needs a square matrix, got {t.shape}")
    if not np.all(np.isfinite(t)):
        raise ValueError("matrix contains non-finite entries")
    z = np.eye(t.shape[0], dtype=complex)
    _kernels.hessenberg(t, z)
    if _kernels.schur_qr(t, z, max_its) < 0:
        raise ConvergenceFailure(f"QR iteration did not converge within {max_its} sweeps per eigenvalue")
    return t, z


def _sort_eigs(lam: np.ndarray) -> np.ndarray:
    # nonincreasing real part, ties by imaginary part
    order = np.lexsort((-lam.imag, -lam.real))
    return lam[order]


def _square(a: PairedTensor):
    if not a.shape.is_square:
        raise ShapeMismatch(f"tensor of shape {a.shape} is not square")


def u_eigenvalues(a: PairedTensor) -> np.ndarray:
    """U-eigenvalues, sorted by nonincreasing real part."""
    _square(a)
    t, _ = schur_matrix(a.unfold())
    return _sort_eigs(np.diag(t).copy())


def is_stable_tensor(a: PairedTensor) -> bool:
    return bool(np.all(u_eigenvalues(a).real < 0))


def match_multisets(x, y, tol: float) -> tuple[bool, float]:
    """Greedy nearest-neighbour matching of two complex multisets.

    Returns ``(all matched within tol, largest matched distance)``.
    """
    x = list(np.asarray(x, dtype=complex))
    y = list(np.asarray(y, dtype=complex))
    if len(x) != len(y):
        return False, np.inf
    worst = 0.0
    for v in x:
        d = [abs(v - w) for w in y]
        k = int(np.argmin(d))
        worst = max(worst, d[k])
        y.pop(k)
    return worst <= tol, worst


@dataclass(frozen=True)
class TensorSchur:
    Q: PairedTensor
    T: PairedTensor
    eigenvalues: np.ndarray


def tensor_schur(a: PairedTensor) -> TensorSchur:
    """``A = Q * T * Q^H`` with unitary ``Q`` and upper triangular ``T``."""
    _square(a)
    t, z = schur_matrix(a.unfold())
    return TensorSchur(PairedTensor.fold(z, a.shape), PairedTensor.fold(t, a.shape), np.diag(t).copy())


@dataclass(frozen=True)
class TensorSvd:
    U: PairedTensor
    D: PairedTensor
    V: PairedTensor
    singular_values: np.ndarray


def tensor_svd(a: PairedTensor) -> TensorSvd:
    """``A = U * D * V^H``; ``D`` is diagonal in the paired sense."""
    m = a.unfold()
    try:
        u, s, vh = np.linalg.svd(m)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"SVD failed: {exc}") from None
    d = np.zeros(m.shape, dtype=complex)
    d[np.arange(s.size), np.arange(s.size)] = s
    rows, cols = a.shape.row_dims, a.shape.col_dims
    return TensorSvd(
        PairedTensor.fold(u, Shape(rows, rows)),
        PairedTensor.fold(d, a.shape),
        PairedTensor.fold(vh.conj().T, Shape(cols, cols)),
        s,
    )


def _gershgorin(m: np.ndarray) -> tuple[float, float]:
    c = m.diagonal().real
    r = np.abs(m).sum(axis=1) - np.abs(m.diagonal())
    return float((c - r).min()), float((c + r).max())


def negative_count(m: np.ndarray, sigma: float) -> int:
    """Number of eigenvalues of Hermitian ``m`` below ``sigma`` (Sylvester inertia)."""
    _, d, _ = sla.ldl(m - sigma * np.eye(m.shape[0]), hermitian=True)
    n = d.shape[0]
    count = 0
    i = 0
    while i < n:
        if i + 1 < n and d[i + 1, i] != 0:
            blk = d[i:i + 2, i:i + 2]
            det = (blk[0, 0] * blk[1, 1] - abs(blk[0, 1]) ** 2).real
            if det < 0:
                count += 1
            elif blk[0, 0].real < 0:
                count += 2
            i += 2
        else:
            count += d[i, i].real < 0
            i += 1
    return count


def rayleigh_quotient_extreme(
    a: PairedTensor,
    mode: str = "smallest",
    x0: PlainTensor | None = None,
    tol: float = 1e-10,
    max_iter: int = 100,
) -> tuple[float, PlainTensor]:
    """Extreme U-eigenpair of a Hermitian tensor by Rayleigh quotient iteration.

    The extreme eigenvalue is first bracketed by inertia bisection, which
    gives a shift close enough that inverse iteration lands on the requested
    end of the spectrum; Rayleigh quotient iteration on tensors then polishes
    the pair to ``||A * X - lam X||_F <= tol * ||A||_2``.
    """
    _square(a)
    if mode not in ("smallest", "largest"):
        raise ValueError(f"mode must be 'smallest' or 'largest', not {mode!r}")
    if not is_hermitian(a, DEFAULT_TOL):
        raise NotHermitian("Rayleigh quotient iteration needs a Hermitian tensor")
    dims = a.shape.row_dims
    if x0 is None:
        x0 = PlainTensor(np.ones(dims, dtype=complex))
    if frobenius_norm(x0) == 0.0:
        raise ValueError("starting tensor must be nonzero")
    sign = 1.0 if mode == "smallest" else -1.0
    work = sign * a
    m = hermitian_part(work).unfold()
    eye = PairedTensor.identity(dims)
    scale = max(spectral_norm(a), np.finfo(float).tiny)
    lo, hi = _gershgorin(m)
    lo -= 1e-3 * scale
    hi += 1e-3 * scale
    # bracket the smallest eigenvalue of `work` in [lo, hi]
    for _ in range(60):
        if hi - lo <= 1e-6 * scale:
            break
        mid = 0.5 * (lo + hi)
        if negative_count(m, mid) >= 1:
            hi = mid
        else:
            lo = mid

    def rq(x):
        return float(np.vdot(x.data, (work @ x).data).real)

    def resid(x, lam):
        return frobenius_norm(work @ x - lam * x)

    shifted = work - (lo - 1e-9 * scale) * eye
    slack = 1e-6 * scale

    def iterate(x):
        x = x / frobenius_norm(x)
        for _ in range(3):
            try:
                y = solve(shifted, x)
            except SingularTensor:
                break
            x = y / frobenius_norm(y)
        lam = rq(x)
        for _ in range(max_iter):
            if resid(x, lam) <= tol * scale:
                return lam, x
            try:
                y = solve(work - lam * eye, x)
            except SingularTensor:
                break  # shift is an eigenvalue to working precision
            x = y / frobenius_norm(y)
            lam = rq(x)
        if resid(x, lam) <= max(tol, 1e-12) * scale * 10:
            return lam, x
        return None

    # a start deficient in the target direction converges elsewhere; the
    # inertia bracket detects that and a seeded random start recovers it
    rng = np.random.default_rng(0)
    starts = [x0] + [
        PlainTensor(rng.standard_normal(dims) + 1j * rng.standard_normal(dims)) for _ in range(3)
    ]
    for start in starts:
        found = iterate(start)
        if found is not None and found[0] <= hi + slack:
            return sign * found[0], found[1]
    raise ConvergenceFailure(f"Rayleigh quotient iteration did not converge in {max_iter} steps")


# Hamiltonian and symplectic structure ----------------------------------------

@dataclass(frozen=True)
class HamiltonianBlocks:
    A: PairedTensor
    G: PairedTensor
    K: PairedTensor


def j_tensor(dims) -> PairedTensor:
    """``J = [[O, I], [-I, O]]_1`` for order-N blocks of row dims ``dims``."""
    eye = PairedTensor.identity(dims)
    zero = 0 * eye
    return block2x2(zero, eye, -eye, zero, 1)


def _half_dims(m: PairedTensor) -> tuple[int, ...]:
    if not m.shape.is_square or m.shape.row_dims[0] % 2:
        raise ShapeMismatch(f"tensor of shape {m.shape} has no even square mode 1")
    d = list(m.shape.row_dims)
    d[0] //= 2
    return tuple(d)


def hamiltonian_assemble(blocks: HamiltonianBlocks, tol: float = DEFAULT_TOL) -> PairedTensor:
    """``[[A, G], [K, -A^H]]_1`` for Hermitian ``G`` and ``K``."""
    a, g, k = blocks.A, blocks.G, blocks.K
    if not (a.shape == g.shape == k.shape) or not a.shape.is_square:
        raise ShapeMismatch(f"Hamiltonian blocks need equal square shapes: {a.shape}, {g.shape}, {k.shape}")
    bad = [n for n, t in (("G", g), ("K", k)) if not is_hermitian(t, tol)]
    if bad:
        raise NotHermitianBlocks(f"block(s) {', '.join(bad)} not Hermitian within {tol:g}")
    return block2x2(a, g, k, -conj_transpose(a), 1)


def hamiltonian_check(m: PairedTensor, tol: float = 1e-10) -> bool:
    """True when ``(J * M)^H = J * M`` within ``tol`` relative."""
    jm = einstein_product(j_tensor(_half_dims(m)), m)
    return frobenius_norm(jm - conj_transpose(jm)) <= tol * max(frobenius_norm(m), 1.0)


def symplectic_check(s: PairedTensor, tol: float = 1e-10) -> bool:
    """True when ``S^H * J * S = J`` within ``tol`` relative."""
    j = j_tensor(_half_dims(s))
    lhs = einstein_product(einstein_product(conj_transpose(s), j), s)
    return frobenius_norm(lhs - j) <= tol * frobenius_norm(j)


def block_matrix(m: PairedTensor) -> np.ndarray:
    """``[[phi(A), phi(B)], [phi(C), phi(D)]]`` for a mode-1 2x2 block tensor."""
    p = shuffle_permutation(1, _half_dims(m))
    return p.T @ m.unfold() @ p


def from_block_matrix(mat: np.ndarray, half_dims) -> PairedTensor:
    """Inverse of ``block_matrix``."""
    p = shuffle_permutation(1, half_dims)
    full = list(half_dims)
    full[0] *= 2
    return PairedTensor.fold(p @ mat @ p.T, Shape(full, full))


@dataclass(frozen=True)
class SchurHamiltonian:
    Q: PairedTensor
    Q1: PairedTensor
    Q2: PairedTensor
    T: PairedTensor
    R: PairedTensor
    eigenvalues: np.ndarray

    def solution(self) -> PairedTensor:
        """``Q2 * Q1^{-1}``, the stabilizing Riccati solution."""
        q1 = self.Q1.unfold()
        q2 = self.Q2.unfold()
        return PairedTensor.fold(np.linalg.solve(q1.T, q2.T).T, self.Q1.shape)


def schur_hamiltonian(m: PairedTensor, imag_tol: float | None = None) -> SchurHamiltonian:
    """Unitary symplectic ``Q`` with ``Q^H * M * Q = [[T, R], [O, -T^H]]_1``.

    The leading block column spans the stable invariant subspace ``W``; the
    completion ``[W, -J W]`` is unitary and symplectic because that subspace
    is Lagrangian.
    """
    half = _half_dims(m)
    n = int(np.prod(half))
    mb = block_matrix(m)
    if imag_tol is None:
        imag_tol = 1e-8 * np.linalg.norm(mb, 2)
    t, z = schur_matrix(mb)
    lam = np.diag(t).copy()
    near = np.abs(lam.real) <= imag_tol
    if near.any():
        raise ImaginaryAxisEigenvalue(
            f"{int(near.sum())} U-eigenvalue(s) within {imag_tol:.2e} of the imaginary axis, "
            f"e.g. {lam[near][0]:.6g}"
        )
    stable = lam.real < 0
    if stable.sum() != n:
        raise ImaginaryAxisEigenvalue(f"expected {n} stable U-eigenvalues, found {int(stable.sum())}")
    _kernels.reorder(t, z, stable)
    w1, w2 = z[:n, :n], z[n:, :n]
    qb = np.block([[w1, -w2], [w2, w1]])
    red = qb.conj().T @ mb @ qb
    tt = np.triu(red[:n, :n])
    shape = Shape(half, half)
    return SchurHamiltonian(
        Q=from_block_matrix(qb, half),
        Q1=PairedTensor.fold(w1, shape),
        Q2=PairedTensor.fold(-w2, shape),
        T=PairedTensor.fold(tt, shape),
        R=PairedTensor.fold(red[:n, n:], shape),
        eigenvalues=np.diag(tt).copy(),
    )


@dataclass(frozen=True)
class SymplecticSvd:
    U: PairedTensor
    V: PairedTensor
    S: PairedTensor
    D: PairedTensor


def symplectic_svd(q: PairedTensor, tol: float = 1e-8) -> SymplecticSvd:
    """``diag(U,U)^H * Q * diag(V,V) = [[S, D], [-D, S]]_1`` with diagonal ``S, D``.

    ``Q`` must have the block form ``[[Q1, Q2], [-Q2, Q1]]_1`` and be unitary.
    """
    half = _half_dims(q)
    n = int(np.prod(half))
    qb = block_matrix(q)
    q1, q2 = qb[:n, :n], qb[:n, n:]
    scale = max(1.0, np.linalg.norm(qb))
    blockform = np.linalg.norm(qb[n:, :n] + q2) + np.linalg.norm(qb[n:, n:] - q1)
    unitary = np.linalg.norm(qb.conj().T @ qb - np.eye(2 * n))
    if blockform > tol * scale or unitary > tol * scale:
        raise NotSymplectic(
            f"tensor is not unitary symplectic in block form "
            f"(block defect {blockform:.2e}, unitarity defect {unitary:.2e})"
        )
    u, s, vh = np.linalg.svd(q1)
    v = vh.conj().T
    d = u.conj().T @ q2 @ v
    # clusters of equal singular values: D is normal there and commutes with S
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and abs(s[stop] - s[start]) <= tol:
            stop += 1
        blk = slice(start, stop)
        dc = d[blk, blk]
        if stop - start > 1 or abs(dc[0, 0].imag) > tol:
            if s[start] > tol:
                # S*D Hermitian and S scalar on the cluster: D Hermitian here
                _, w = np.linalg.eigh(0.5 * (dc + dc.conj().T))
                u[:, blk] = u[:, blk] @ w
                v[:, blk] = v[:, blk] @ w
            else:
                # Q1 vanishes on the cluster, so V may absorb the unitary D
                v[:, blk] = v[:, blk] @ dc.conj().T
        start = stop
    d = u.conj().T @ q2 @ v
    d = np.diag(np.diag(d).real)
    shape = Shape(half, half)
    return SymplecticSvd(
        U=PairedTensor.fold(u, shape),
        V=PairedTensor.fold(v, shape),
        S=PairedTensor.fold(np.diag(s), shape),
        D=PairedTensor.fold(d, shape),
    )
