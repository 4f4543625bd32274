"""Continuous-time multilinear time-invariant (MLTI) systems.

``dX/dt = A * X + B * U``, ``Y = C * X + D * U`` with paired-tensor
coefficients. Stabilizability and detectability use the Hautus test on the
unfoldings, which is exact under the unfolding isomorphism.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .equations import ArteProblem, ArteReport, arte_schur_solve
from .errors import (
    GammaTooSmall,
    ImaginaryAxisEigenvalue,
    PreconditionError,
    ShapeMismatch,
    SingularQ1,
    SingularResolvent,
    SingularTensor,
    UnstableSystem,
)
from .spectral import schur_matrix, u_eigenvalues
from .tensor import (
    PairedTensor,
    Shape,
    block2x2,
    conj_transpose,
    einstein_product,
    hermitian_part,
    inverse,
    solve,
    spectral_norm,
)


@dataclass(frozen=True)
class MltiSystem:
    A: PairedTensor
    B: PairedTensor
    C: PairedTensor
    D: PairedTensor | None = None

    def __post_init__(self):
        a, b, c = self.A, self.B, self.C
        if not a.shape.is_square:
            raise ShapeMismatch(f"A must be square, got {a.shape}")
        if b.shape.row_dims != a.shape.row_dims:
            raise ShapeMismatch(f"B rows {b.shape.row_dims} do not match A {a.shape.row_dims}")
        if c.shape.col_dims != a.shape.col_dims:
            raise ShapeMismatch(f"C cols {c.shape.col_dims} do not match A {a.shape.col_dims}")
        dshape = Shape(c.shape.row_dims, b.shape.col_dims)
        if self.D is None:
            object.__setattr__(self, "D", PairedTensor.zeros(dshape))
        elif self.D.shape != dshape:
            raise ShapeMismatch(f"D has shape {self.D.shape}, expected {dshape}")

    @property
    def state_dims(self) -> tuple[int, ...]:
        return self.A.shape.row_dims


def transfer_function(sys: MltiSystem, s: complex) -> PairedTensor:
    """``D + C * (s I - A)^{-1} * B``."""
    res = s * PairedTensor.identity(sys.state_dims) - sys.A
    try:
        x = solve(res, sys.B)
    except SingularTensor:
        raise SingularResolvent(f"s = {s} is a U-eigenvalue of A") from None
    return sys.D + einstein_product(sys.C, x)


def sigma_max(t: PairedTensor) -> float:
    return spectral_norm(t)


def is_stable(sys_or_a) -> bool:
    a = sys_or_a.A if isinstance(sys_or_a, MltiSystem) else sys_or_a
    return bool(np.all(u_eigenvalues(a).real < 0))


def _rank(m: np.ndarray, rel: float = 1e-10) -> int:
    sv = np.linalg.svd(m, compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.sum(sv > rel * sv[0]))


def is_stabilizable(a: PairedTensor, b: PairedTensor) -> bool:
    """Hautus test: ``rank [lam I - A, B] = |I|`` for every ``Re lam >= 0``."""
    if b.shape.row_dims != a.shape.row_dims:
        raise ShapeMismatch(f"B rows {b.shape.row_dims} do not match A {a.shape.row_dims}")
    am, bm = a.unfold(), b.unfold()
    n = am.shape[0]
    margin = 1e-10 * max(np.linalg.norm(am, 2), 1.0)
    for lam in u_eigenvalues(a):
        if lam.real >= -margin and _rank(np.hstack([lam * np.eye(n) - am, bm])) < n:
            return False
    return True


def is_detectable(c: PairedTensor, a: PairedTensor) -> bool:
    """Detectability of ``(C, A)``, i.e. stabilizability of ``(A^H, C^H)``."""
    return is_stabilizable(conj_transpose(a), conj_transpose(c))


@dataclass(frozen=True)
class GammaBlocks:
    """Blocks of the gamma-Hamiltonian ``[[A_g, G_g], [-K_g, -A_g^H]]``."""

    A: PairedTensor
    G: PairedTensor
    K: PairedTensor
    R: PairedTensor


def gamma_blocks(sys: MltiSystem, gamma: float) -> GammaBlocks:
    """``A_g = A + B R^-1 D^H C``, ``G_g = B R^-1 B^H``, ``K_g = C^H (I + D R^-1 D^H) C``."""
    smax = sigma_max(sys.D)
    if not gamma > smax:
        raise GammaTooSmall(f"gamma = {gamma:g} must exceed sigma_max(D) = {smax:g}")
    b, c, d = sys.B, sys.C, sys.D
    dh = conj_transpose(d)
    r = gamma**2 * PairedTensor.identity(b.shape.col_dims) - einstein_product(dh, d)
    rinv = inverse(r)
    ag = sys.A + einstein_product(einstein_product(einstein_product(b, rinv), dh), c)
    gg = hermitian_part(einstein_product(einstein_product(b, rinv), conj_transpose(b)))
    inner = PairedTensor.identity(d.shape.row_dims) + einstein_product(einstein_product(d, rinv), dh)
    kg = hermitian_part(einstein_product(einstein_product(conj_transpose(c), inner), c))
    return GammaBlocks(ag, gg, kg, r)


def m_gamma(sys: MltiSystem, gamma: float) -> PairedTensor:
    """Hamiltonian tensor whose imaginary-axis U-eigenvalues mark ``gamma <= ||G||_inf``."""
    blk = gamma_blocks(sys, gamma)
    return block2x2(blk.A, blk.G, -blk.K, -conj_transpose(blk.A), 1)


def imaginary_eigenvalues(m: PairedTensor, imag_tol: float | None = None) -> np.ndarray:
    """U-eigenvalues of ``m`` within ``imag_tol`` of the imaginary axis."""
    mat = m.unfold()
    if imag_tol is None:
        imag_tol = 1e-8 * np.linalg.norm(mat, 2)
    t, _ = schur_matrix(mat)
    lam = np.diag(t)
    return lam[np.abs(lam.real) <= imag_tol]


def frequency_sweep(sys: MltiSystem, omegas) -> np.ndarray:
    """``sigma_max(G(i w))`` on the given frequencies."""
    return np.array([sigma_max(transfer_function(sys, 1j * w)) for w in omegas])


@dataclass
class HinfResult:
    norm: float
    lower: float
    upper: float
    trials: list[tuple[float, bool, np.ndarray]] = field(default_factory=list)


def hinf_norm(sys: MltiSystem, rel_tol: float = 1e-4, detail: bool = False, max_steps: int = 200):
    """H-infinity norm by bisection on the gamma-Hamiltonian test.

    ``gamma`` is an upper bound iff ``M_gamma`` has no imaginary-axis
    U-eigenvalue. The bracket starts from a logarithmic frequency grid with
    64 points per sign (negative frequencies matter for complex data): its
    peak is a lower bound, twice the peak is doubled until certified.
    """
    if not is_stable(sys):
        raise UnstableSystem("H-infinity norm needs a stable A")
    scale = max(spectral_norm(sys.A), 1.0)
    pos = np.logspace(-3, 3, 63) * scale
    grid = np.concatenate([-pos[::-1], [0.0], pos])
    peak = float(frequency_sweep(sys, grid).max())
    dmax = sigma_max(sys.D)
    lo = max(peak, dmax)
    if lo == 0.0:
        res = HinfResult(0.0, 0.0, 0.0)
        return res if detail else 0.0
    trials: list[tuple[float, bool, np.ndarray]] = []

    def upper_ok(gamma: float) -> bool:
        omegas = imaginary_eigenvalues(m_gamma(sys, gamma))
        ok = omegas.size == 0
        trials.append((gamma, ok, omegas.imag.copy()))
        return ok

    hi = 2.0 * lo
    while not upper_ok(hi):
        lo = hi
        hi *= 2.0
        if len(trials) > 60:
            raise UnstableSystem("could not certify an upper bound for the H-infinity norm")
    for _ in range(max_steps):
        if hi - lo <= rel_tol * hi:
            break
        mid = 0.5 * (lo + hi)
        if mid <= dmax:
            lo = mid
            continue
        if upper_ok(mid):
            hi = mid
        else:
            lo = mid
    res = HinfResult(0.5 * (lo + hi), lo, hi, trials)
    return res if detail else res.norm


@dataclass
class BrlVerdict:
    gamma: float
    hinf: float
    cond_i: bool
    cond_ii: bool
    cond_iii: bool
    E: PairedTensor | None
    notes: list[str] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return self.cond_i == self.cond_ii == self.cond_iii


def bounded_real_check(sys: MltiSystem, gamma: float, rel_tol: float = 1e-4) -> BrlVerdict:
    """Evaluate the three equivalent bounded-real conditions at ``gamma``."""
    if not is_stable(sys):
        raise UnstableSystem("bounded real lemma needs a stable A")
    if not is_stabilizable(sys.A, sys.B):
        raise PreconditionError("(A, B) is not stabilizable")
    if not is_detectable(sys.C, sys.A):
        raise PreconditionError("(C, A) is not detectable")
    notes: list[str] = []
    hinf = hinf_norm(sys, rel_tol)
    cond_i = hinf < gamma
    dmax = sigma_max(sys.D)
    if not gamma > dmax:
        notes.append(f"sigma_max(D) = {dmax:g} >= gamma")
        return BrlVerdict(gamma, hinf, cond_i, False, False, None, notes)
    cond_ii = imaginary_eigenvalues(m_gamma(sys, gamma)).size == 0
    blk = gamma_blocks(sys, gamma)
    problem = ArteProblem(blk.A, -blk.G, blk.K)
    e = None
    try:
        rep: ArteReport = arte_schur_solve(problem)
        e = rep.E
        scale = max(spectral_norm(e), 1.0)
        psd = rep.psd_certificate >= -1e-8 * scale
        res_ok = rep.residual <= 1e-8 * max(spectral_norm(blk.K), 1.0) * scale
        closed = blk.A + einstein_product(blk.G, e)
        axis_free = imaginary_eigenvalues(closed).size == 0
        cond_iii = bool(psd and res_ok and axis_free)
        if not cond_iii:
            notes.append(f"Riccati: psd={psd} residual_ok={res_ok} axis_free={axis_free}")
    except (ImaginaryAxisEigenvalue, SingularQ1) as exc:
        cond_iii = False
        notes.append(f"Riccati solve failed: {exc}")
    return BrlVerdict(gamma, hinf, cond_i, cond_ii, cond_iii, e, notes)


def lqr(sys: MltiSystem) -> tuple[PairedTensor, ArteReport]:
    """Feedback tensor ``F = -B^H * E`` and the Riccati report."""
    problem = ArteProblem.from_factors(sys.A, sys.B, sys.C)
    rep = arte_schur_solve(problem, check_preconditions=True)
    gain = -einstein_product(conj_transpose(sys.B), rep.E)
    return gain, rep


def lqr_gain(sys: MltiSystem) -> PairedTensor:
    """``-B^H * E`` for the stabilizing solution of the LQR Riccati equation."""
    return lqr(sys)[0]
