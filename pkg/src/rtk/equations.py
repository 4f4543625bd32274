"""Sylvester, Lyapunov and algebraic Riccati tensor equations.

Sign conventions:

* Sylvester:  ``A * E + E * B = K``
* Lyapunov:   ``A^H * E + E * A + Q = O``
* Riccati:    ``f(E) = A^H * E + E * A - E * G * E + K = O``
"""
from __future__ import annotations

from dataclasses import dataclass, field
import logging
import warnings
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .errors import (
    ConvergenceFailure,
    MaxIterationsExceeded,
    NoUniqueSolution,
    NotHermitian,
    ShapeMismatch,
    SingularQ1,
    SingularTensor,
    UnstableCoefficient,
)
from .spectral import hamiltonian_assemble, HamiltonianBlocks, schur_hamiltonian, u_eigenvalues
from .structured import kron, unvec, vec
from .tensor import (
    DEFAULT_TOL,
    PairedTensor,
    PlainTensor,
    Shape,
    apply,
    conj_transpose,
    einstein_product,
    frobenius_norm,
    hermitian_part,
    is_hermitian,
    solve,
    spectral_norm,
    transpose,
)

log = logging.getLogger(__name__)

DIRECT_LIMIT = 64  # largest |I| for which the vectorized system is formed by default
INNER_METHODS = ("bicg-tensor", "bicg-vec", "direct")


# BiCG ------------------------------------------------------------------------

@dataclass
class BicgResult:
    x: np.ndarray
    iterations: int
    residual: float


def bicg(
    matvec: Callable[[np.ndarray], np.ndarray],
    rmatvec: Callable[[np.ndarray], np.ndarray],
    b: np.ndarray,
    x0: np.ndarray | None = None,
    tol: float = 1e-10,
    atol: float = 0.0,
    maxiter: int | None = None,
) -> BicgResult:
    """Unpreconditioned biconjugate gradients.

    Works on arrays of any shape; ``rmatvec`` applies the adjoint operator.
    The shadow residual starts as the conjugate of the initial residual.
    Stops when ``||r|| <= max(tol * ||b||, atol)``.
    """
    b = np.asarray(b, dtype=complex)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=complex)
    if maxiter is None:
        maxiter = 10 * b.size
    stop = max(tol * np.linalg.norm(b), atol)
    r = b - matvec(x)
    rt = r.conj()
    p, pt = r.copy(), rt.copy()
    rho = np.vdot(rt, r)
    res = float(np.linalg.norm(r))
    for k in range(maxiter + 1):
        if res <= stop:
            return BicgResult(x, k, res)
        if k == maxiter:
            break
        q = matvec(p)
        qt = rmatvec(pt)
        denom = np.vdot(pt, q)
        if denom == 0 or rho == 0:
            raise ConvergenceFailure(f"BiCG breakdown at iteration {k} (residual {res:.3e})", k)
        alpha = rho / denom
        x = x + alpha * p
        r = r - alpha * q
        rt = rt - np.conj(alpha) * qt
        res = float(np.linalg.norm(r))
        rho_new = np.vdot(rt, r)
        beta = rho_new / rho
        rho = rho_new
        p = r + beta * p
        pt = rt + np.conj(beta) * pt
        if not np.isfinite(res):
            raise ConvergenceFailure(f"BiCG diverged at iteration {k + 1}", k + 1)
    raise ConvergenceFailure(
        f"BiCG reached {maxiter} iterations with residual {res:.3e} > {stop:.3e}", maxiter
    )


# Sylvester and Lyapunov --------------------------------------------------------

def _check_square(name: str, t: PairedTensor):
    if not t.shape.is_square:
        raise ShapeMismatch(f"{name} must be square, got shape {t.shape}")


def sylvester_operator(a: PairedTensor, b: PairedTensor) -> PairedTensor:
    """``I (x) A + B^T (x) I``, acting on ``vec(E)``."""
    eye_i = PairedTensor.identity(a.shape.row_dims)
    eye_j = PairedTensor.identity(b.shape.row_dims)
    return kron(eye_j, a) + kron(transpose(b), eye_i)


def sylvester_solve(
    a: PairedTensor,
    b: PairedTensor,
    k: PairedTensor,
    method: str = "direct",
    tol: float = 1e-10,
    atol: float = 0.0,
    maxiter: int | None = None,
) -> PairedTensor:
    """Solve ``A * E + E * B = K``."""
    _check_square("A", a)
    _check_square("B", b)
    if k.shape != Shape(a.shape.row_dims, b.shape.col_dims):
        raise ShapeMismatch(f"K has shape {k.shape}, expected rows {a.shape.row_dims} cols {b.shape.col_dims}")
    if method == "direct":
        lam = u_eigenvalues(a)
        mu = u_eigenvalues(b)
        gap = np.abs(lam[:, None] + mu[None, :]).min()
        scale = max(spectral_norm(a) + spectral_norm(b), 1.0)
        if gap <= 1e-12 * scale:
            raise NoUniqueSolution(f"A and -B share a U-eigenvalue (gap {gap:.2e})")
        try:
            e = solve(sylvester_operator(a, b), vec(k))
        except SingularTensor as exc:
            raise NoUniqueSolution(str(exc)) from None
        return unvec(e, k.shape)
    if method == "bicg":
        am, bm = a.unfold(), b.unfold()
        amh, bmh = am.conj().T, bm.conj().T
        res = bicg(
            lambda x: am @ x + x @ bm,
            lambda y: amh @ y + y @ bmh,
            k.unfold(),
            tol=tol,
            atol=atol,
            maxiter=maxiter if maxiter is not None else 10 * a.shape.n_rows * b.shape.n_rows,
        )
        return PairedTensor.fold(res.x, k.shape)
    raise ValueError(f"unknown Sylvester method {method!r}")


def lyapunov_operator(a: PairedTensor) -> PairedTensor:
    """``I (x) A^H + A^T (x) I``, the vectorized Lyapunov operator."""
    return sylvester_operator(conj_transpose(a), a)


def lyapunov_solve(
    a: PairedTensor,
    q: PairedTensor,
    method: str = "direct",
    tol: float = 1e-10,
    atol: float = 0.0,
    maxiter: int | None = None,
    check_stable: bool = False,
    x0: PairedTensor | None = None,
    info: dict | None = None,
) -> PairedTensor:
    """Solve ``A^H * E + E * A + Q = O``.

    Parameters
    ----------
    method : {'direct', 'bicg-tensor', 'bicg-vec'}
        ``bicg-tensor`` runs BiCG on ``X -> A^H * X + X * A`` with Einstein
        products; ``bicg-vec`` runs it on the materialized vectorized system;
        ``direct`` factorizes the vectorized system.
    info : dict, optional
        Receives ``iterations`` and ``residual`` of the iterative solve.
    """
    _check_square("A", a)
    if q.shape != a.shape:
        raise ShapeMismatch(f"Q has shape {q.shape}, expected {a.shape}")
    if check_stable:
        lam = u_eigenvalues(a)
        if np.any(lam.real >= 0):
            raise UnstableCoefficient(f"A is not stable (max real part {lam.real.max():.3e})")
    n = a.shape.n_rows
    if maxiter is None:
        maxiter = 10 * n * n
    if method == "direct":
        e = sylvester_solve(conj_transpose(a), a, -q, "direct")
        if info is not None:
            info.update(iterations=0, residual=frobenius_norm(lyapunov_residual(a, q, e)))
        return e
    if method == "bicg-tensor":
        ah = conj_transpose(a)

        def op(x):
            t = PairedTensor.fold(x, a.shape)
            return (einstein_product(ah, t) + einstein_product(t, a)).unfold()

        def op_adj(y):
            t = PairedTensor.fold(y, a.shape)
            return (einstein_product(a, t) + einstein_product(t, ah)).unfold()

        start = None if x0 is None else x0.unfold()
        res = bicg(op, op_adj, -q.unfold(), start, tol, atol, maxiter)
        out = PairedTensor.fold(res.x, a.shape)
    elif method == "bicg-vec":
        lv = lyapunov_operator(a)
        lvh = conj_transpose(lv)
        vdims = lv.shape.col_dims

        def op(x):
            return apply(lv, PlainTensor(x, vdims)).data

        def op_adj(y):
            return apply(lvh, PlainTensor(y, vdims)).data

        start = None if x0 is None else vec(x0).data
        res = bicg(op, op_adj, -vec(q).data, start, tol, atol, maxiter)
        out = unvec(PlainTensor(res.x, vdims), a.shape)
    else:
        raise ValueError(f"unknown Lyapunov method {method!r}; choose from {INNER_METHODS}")
    if info is not None:
        info.update(iterations=res.iterations, residual=res.residual)
    return out


def lyapunov_residual(a: PairedTensor, q: PairedTensor, e: PairedTensor) -> PairedTensor:
    return einstein_product(conj_transpose(a), e) + einstein_product(e, a) + q


def tensor_exponential(a: PairedTensor, t: float = 1.0) -> PairedTensor:
    """``exp(t A)`` by Pade scaling and squaring on the unfolding."""
    _check_square("A", a)
    return PairedTensor.fold(sla.expm(t * a.unfold()), a.shape)


# Riccati -----------------------------------------------------------------------

@dataclass(frozen=True)
class ArteProblem:
    """Coefficients of ``A^H * E + E * A - E * G * E + K = O``.

    ``B`` and ``C`` are kept when the problem was built from a system with
    ``G = B * B^H`` and ``K = C^H * C``.
    """

    A: PairedTensor
    G: PairedTensor
    K: PairedTensor
    B: PairedTensor | None = None
    C: PairedTensor | None = None
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        _check_square("A", self.A)
        if not (self.A.shape == self.G.shape == self.K.shape):
            raise ShapeMismatch(
                f"A, G, K need identical shapes, got {self.A.shape}, {self.G.shape}, {self.K.shape}"
            )
        bad = [n for n, t in (("G", self.G), ("K", self.K)) if not is_hermitian(t, self.tol)]
        if bad:
            raise NotHermitian(f"{', '.join(bad)} not Hermitian within {self.tol:g}")

    @classmethod
    def from_factors(cls, a: PairedTensor, b: PairedTensor, c: PairedTensor) -> ArteProblem:
        g = hermitian_part(einstein_product(b, conj_transpose(b)))
        k = hermitian_part(einstein_product(conj_transpose(c), c))
        return cls(a, g, k, b, c)

    @property
    def shape(self) -> Shape:
        return self.A.shape

    def closed_loop(self, e: PairedTensor) -> PairedTensor:
        return self.A - einstein_product(self.G, e)


@dataclass
class ArteReport:
    E: PairedTensor
    residual_history: list[float]
    closed_loop_eigenvalues: np.ndarray
    psd_certificate: float
    method: str
    iterations: int
    converged: bool = True
    inner_iterations: list[int] = field(default_factory=list)

    @property
    def residual(self) -> float:
        return self.residual_history[-1]


def arte_residual(problem: ArteProblem, e: PairedTensor) -> tuple[PairedTensor, float]:
    """``f(E)`` and its Frobenius norm."""
    if e.shape != problem.shape:
        raise ShapeMismatch(f"E has shape {e.shape}, expected {problem.shape}")
    a, g, k = problem.A, problem.G, problem.K
    f = (
        einstein_product(conj_transpose(a), e)
        + einstein_product(e, a)
        - einstein_product(einstein_product(e, g), e)
        + k
    )
    return f, frobenius_norm(f)


def frechet(problem: ArteProblem, e: PairedTensor, de: PairedTensor) -> PairedTensor:
    """``L(dE) = (A - G*E)^H * dE + dE * (A - G*E)``."""
    ac = problem.closed_loop(e)
    return einstein_product(conj_transpose(ac), de) + einstein_product(de, ac)


def _finish(problem: ArteProblem, e: PairedTensor, history, method, iterations, converged=True, inner=()):
    lam = u_eigenvalues(problem.closed_loop(e))
    psd = float(np.linalg.eigvalsh(hermitian_part(e).unfold())[0])
    return ArteReport(e, list(history), lam, psd, method, iterations, converged, list(inner))


def default_initial(problem: ArteProblem) -> PairedTensor:
    """Schur-Hamiltonian solution when available, else a large multiple of I.

    With ``G = O`` the equation is a Lyapunov equation and the zero start
    reaches the solution in one Newton step.
    """
    if not np.any(problem.G.unfold()):
        return PairedTensor.zeros(problem.shape)
    try:
        return arte_schur_solve(problem).E
    except Exception as exc:  # noqa: BLE001 - any failure falls back to the heuristic start
        log.info("Schur start unavailable (%s); using a scaled identity", exc)
    sv = np.linalg.svd(problem.G.unfold(), compute_uv=False)
    guess = sv[sv > 1e-12 * max(sv[0], 1.0)].min() if sv[0] > 0 else 1.0
    beta = 10.0 * max(spectral_norm(problem.A), 1.0) / guess
    return beta * PairedTensor.identity(problem.shape.row_dims)


def newton_arte(
    problem: ArteProblem,
    e0: PairedTensor | None = None,
    inner: str | None = None,
    eps: float = 1e-8,
    inner_tol: float = 1e-4,
    max_iter: int = 50,
    warn_unstable: bool = True,
) -> ArteReport:
    """Newton iteration for the Riccati tensor equation.

    Each step forms ``A_k = A - G * E_k`` and ``K_k = E_k^H * G * E_k + K``
    and solves ``A_k^H * E + E * A_k + K_k = O``. Iterative inner solves start
    from zero and stop at the absolute residual ``inner_tol``. Iterates are
    symmetrized after every solve. Stops once ``||f(E_k)||_F < eps``.
    """
    if inner is None:
        inner = "direct" if problem.shape.n_rows <= DIRECT_LIMIT else "bicg-tensor"
    if inner not in INNER_METHODS:
        raise ValueError(f"unknown inner method {inner!r}; choose from {INNER_METHODS}")
    e = default_initial(problem) if e0 is None else e0
    if e.shape != problem.shape:
        raise ShapeMismatch(f"E0 has shape {e.shape}, expected {problem.shape}")
    if not is_hermitian(e, 1e-8):
        raise NotHermitian("E0 must be Hermitian")
    e = hermitian_part(e)
    if warn_unstable and np.any(u_eigenvalues(problem.closed_loop(e)).real >= 0):
        warnings.warn("A - G*E0 is not stable; Newton convergence is not guaranteed", RuntimeWarning, stacklevel=2)
    history = [arte_residual(problem, e)[1]]
    inner_its: list[int] = []
    g = problem.G
    for k in range(max_iter):
        if history[-1] < eps:
            return _finish(problem, e, history, "newton", k, True, inner_its)
        ak = problem.closed_loop(e)
        kk = einstein_product(einstein_product(conj_transpose(e), g), e) + problem.K
        info: dict = {}
        try:
            e = lyapunov_solve(ak, kk, inner, tol=0.0, atol=inner_tol, info=info)
        except ConvergenceFailure as exc:
            raise ConvergenceFailure(f"inner solve failed at Newton step {k + 1}: {exc}", k + 1) from exc
        except NoUniqueSolution as exc:
            raise NoUniqueSolution(f"Newton step {k + 1}: closed loop has a singular Lyapunov operator ({exc})") from exc
        e = hermitian_part(e)
        inner_its.append(info.get("iterations", 0))
        r = arte_residual(problem, e)[1]
        history.append(r)
        log.debug("newton step %d: residual %.6e (%d inner)", k + 1, r, inner_its[-1])
        if not np.isfinite(r):
            raise ConvergenceFailure(f"Newton diverged at step {k + 1}", k + 1)
    if history[-1] < eps:
        return _finish(problem, e, history, "newton", max_iter, True, inner_its)
    raise MaxIterationsExceeded(
        f"Newton did not reach residual {eps:g} in {max_iter} steps (last {history[-1]:.3e})", max_iter
    )


def arte_schur_solve(
    problem: ArteProblem,
    check_preconditions: bool = False,
    imag_tol: float | None = None,
) -> ArteReport:
    """Stabilizing solution ``E = Q2 * Q1^{-1}`` from the Schur-Hamiltonian form."""
    if check_preconditions and problem.B is not None and problem.C is not None:
        from .control import is_detectable, is_stabilizable
        from .errors import PreconditionError

        if not is_stabilizable(problem.A, problem.B):
            raise PreconditionError("(A, B) is not stabilizable")
        if not is_detectable(problem.C, problem.A):
            raise PreconditionError("(C, A) is not detectable")
    m = hamiltonian_assemble(HamiltonianBlocks(problem.A, problem.G, problem.K), problem.tol)
    sh = schur_hamiltonian(m, imag_tol)
    q1 = sh.Q1.unfold()
    sv = np.linalg.svd(q1, compute_uv=False)
    if sv[-1] <= 1e-12 * max(sv[0], 1.0):
        raise SingularQ1(f"Q1 is numerically singular (sigma_min {sv[-1]:.2e})")
    e = hermitian_part(sh.solution())
    return _finish(problem, e, [arte_residual(problem, e)[1]], "schur", 0)
