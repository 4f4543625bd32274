import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given
from hypothesis import strategies as st

from conftest import dims_strategy, rand_paired, seeds
from rtk import examples as ex
from rtk.errors import ImaginaryAxisEigenvalue, NotHermitian, NotHermitianBlocks, NotSymplectic
from rtk.spectral import (
    HamiltonianBlocks,
    block_matrix,
    from_block_matrix,
    hamiltonian_assemble,
    hamiltonian_check,
    is_stable_tensor,
    j_tensor,
    match_multisets,
    negative_count,
    rayleigh_quotient_extreme,
    schur_hamiltonian,
    schur_matrix,
    symplectic_check,
    symplectic_svd,
    tensor_schur,
    tensor_svd,
    u_eigenvalues,
)
from rtk.tensor import PairedTensor, PlainTensor, Shape, einstein_product, frobenius_norm, hermitian_part


def rand_hermitian(rng, dims):
    return hermitian_part(rand_paired(rng, dims))


def rand_hamiltonian(rng, dims):
    blocks = HamiltonianBlocks(rand_paired(rng, dims), rand_hermitian(rng, dims), rand_hermitian(rng, dims))
    return blocks, hamiltonian_assemble(blocks)


def doubled(dims):
    return (2 * dims[0],) + tuple(dims[1:])


def test_schur_matrix_reconstructs():
    rng = np.random.default_rng(0)
    m = rng.standard_normal((7, 7)) + 1j * rng.standard_normal((7, 7))
    t, z = schur_matrix(m)
    assert np.allclose(np.tril(t, -1), 0)
    assert np.allclose(z @ t @ z.conj().T, m, atol=1e-12)
    ok, _ = match_multisets(np.diag(t), np.linalg.eigvals(m), 1e-10)
    assert ok


def test_schur_matrix_rejects_bad_input():
    with pytest.raises(ValueError):
        schur_matrix(np.array([[np.nan]]))


def test_u_eigenvalues_of_rank_one():
    a = PairedTensor.outer(ex.A1, ex.A2)
    want = np.multiply.outer(np.linalg.eigvals(ex.A1), np.linalg.eigvals(ex.A2)).ravel()
    lam = u_eigenvalues(a)
    assert match_multisets(lam, want, 1e-10)[0]
    assert np.all(np.diff(lam.real) <= 1e-12)
    # Example 1's open loop is unstable
    assert not is_stable_tensor(a)
    assert is_stable_tensor(-1.0 * PairedTensor.identity((3, 2)))


def test_match_multisets():
    assert match_multisets([1, 2j], [2j, 1 + 1e-9], 1e-8) == (True, pytest.approx(1e-9))
    assert not match_multisets([1, 1], [1, 2], 1e-3)[0]
    assert not match_multisets([1], [1, 2], 1e-3)[0]


@given(seeds, dims_strategy(order=(1, 2), max_dim=3), dims_strategy(order=(1, 2), max_dim=3))
def test_tensor_schur_and_svd(seed, rows, cols):
    n = min(len(rows), len(cols))
    rng = np.random.default_rng(seed)
    a = rand_paired(rng, rows[:n])
    s = tensor_schur(a)
    rec = s.Q @ s.T @ s.Q.H
    assert frobenius_norm(rec - a) <= 1e-10 * frobenius_norm(a)
    assert np.allclose(np.tril(s.T.unfold(), -1), 0)
    b = rand_paired(rng, rows[:n], cols[:n])
    d = tensor_svd(b)
    assert frobenius_norm(d.U @ d.D @ d.V.H - b) <= 1e-10 * frobenius_norm(b)
    assert np.allclose(d.singular_values, np.linalg.svd(b.unfold(), compute_uv=False))


@given(seeds, st.integers(2, 8))
def test_negative_count_matches_eigvalsh(seed, n):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    m = m + m.conj().T
    lam = np.linalg.eigvalsh(m)
    sigma = float(rng.uniform(lam[0] - 1, lam[-1] + 1))
    if np.min(np.abs(lam - sigma)) > 1e-8:
        assert negative_count(m, sigma) == int(np.sum(lam < sigma))


def test_rayleigh_example1(example1):
    e = example1[1]
    lam, x = rayleigh_quotient_extreme(e)
    assert abs(lam - np.linalg.eigvalsh(e.unfold())[0]) < 1e-10
    assert abs(lam - ex.PSD_MIN) < 1e-3
    assert frobenius_norm(e @ x - lam * x) < 1e-8
    big, _ = rayleigh_quotient_extreme(e, "largest")
    assert big == pytest.approx(np.linalg.eigvalsh(e.unfold())[-1])


@given(seeds, dims_strategy(order=(1, 2), max_dim=3))
def test_rayleigh_random(seed, dims):
    rng = np.random.default_rng(seed)
    a = rand_hermitian(rng, dims)
    lam = np.linalg.eigvalsh(a.unfold())
    got, _ = rayleigh_quotient_extreme(a)
    assert got == pytest.approx(lam[0], abs=1e-8 * max(1, abs(lam).max()))


def test_rayleigh_errors():
    with pytest.raises(NotHermitian):
        rayleigh_quotient_extreme(PairedTensor.fold(np.array([[0, 1.0], [0, 0]]), Shape((2,), (2,))))
    with pytest.raises(ValueError):
        rayleigh_quotient_extreme(PairedTensor.identity((2,)), "middle")


def test_rayleigh_custom_start():
    a = PairedTensor.fold(np.diag([3.0, 1.0, 2.0]), Shape((3,), (3,)))
    lam, _ = rayleigh_quotient_extreme(a, x0=PlainTensor(np.array([1.0, 0.0, 0.0])))
    assert lam == pytest.approx(1.0)


def test_hamiltonian_assemble_and_check():
    rng = np.random.default_rng(1)
    blocks, m = rand_hamiltonian(rng, (2, 3))
    assert m.shape == Shape((4, 3), (4, 3))
    assert hamiltonian_check(m)
    bm = block_matrix(m)
    assert np.allclose(bm[:6, :6], blocks.A.unfold())
    assert np.allclose(bm[:6, 6:], blocks.G.unfold())
    assert np.allclose(bm[6:, :6], blocks.K.unfold())
    assert np.allclose(bm[6:, 6:], -blocks.A.unfold().conj().T)
    assert np.array_equal(from_block_matrix(bm, (2, 3)).array, m.array)
    assert not hamiltonian_check(rand_paired(rng, (4, 3)))
    with pytest.raises(NotHermitianBlocks):
        hamiltonian_assemble(HamiltonianBlocks(blocks.A, blocks.A, blocks.K))


def test_j_tensor_is_symplectic():
    j = j_tensor((2, 2))
    assert j.shape == Shape((4, 2), (4, 2))
    assert symplectic_check(j)
    assert np.allclose((j @ j).unfold(), -np.eye(8))


@given(seeds, dims_strategy(order=(1, 2, 3), max_dim=2))
def test_hamiltonian_spectral_symmetry(seed, dims):
    rng = np.random.default_rng(seed)
    _, m = rand_hamiltonian(rng, dims)
    lam = u_eigenvalues(m)
    scale = 1 + np.linalg.norm(m.unfold(), 2)
    ok, worst = match_multisets(lam, -lam.conj(), 1e-8 * scale)
    assert ok, worst


@given(seeds, dims_strategy(order=(1, 2), max_dim=3))
def test_hamiltonian_eigenpair_identity(seed, dims):
    rng = np.random.default_rng(seed)
    blocks, m = rand_hamiltonian(rng, dims)
    n = int(np.prod(dims))
    # eigenpairs of the unfolding give the U-eigentensors [X; Y]_1
    vals, vecs = np.linalg.eig(m.unfold())
    scale = 1 + np.linalg.norm(m.unfold(), 2)
    half = Shape(dims, (1,) * len(dims))
    for k in range(vals.size):
        xy = PairedTensor.fold(vecs[:, [k]], Shape(doubled(dims), (1,) * len(dims)))
        arr = xy.array
        x = PairedTensor(arr[: dims[0]], half)
        y = PairedTensor(arr[dims[0]:], half)
        lhs = (x.H @ blocks.K @ x + y.H @ blocks.G @ y).unfold()[0, 0]
        rhs = (vals[k] + np.conj(vals[k])) * (x.H @ y).unfold()[0, 0]
        assert abs(lhs - rhs) <= 1e-8 * scale
    assert n == x.shape.n_rows


def stable_hamiltonian(rng, dims):
    """Hamiltonian from a random stabilizable/detectable triple (no imaginary eigenvalues)."""
    a = rand_paired(rng, dims)
    b, c = rand_paired(rng, dims), rand_paired(rng, dims)
    g = hermitian_part(b @ b.H)
    k = hermitian_part(c.H @ c)
    return HamiltonianBlocks(a, g, k)


@given(seeds, dims_strategy(order=(1, 2), max_dim=3))
def test_schur_hamiltonian(seed, dims):
    rng = np.random.default_rng(seed)
    blocks = stable_hamiltonian(rng, dims)
    m = hamiltonian_assemble(blocks)
    sh = schur_hamiltonian(m)
    q, j = sh.Q, j_tensor(dims)
    assert frobenius_norm(q.H @ j @ q - j) <= 1e-8 * frobenius_norm(j)
    assert frobenius_norm(q.H @ q - PairedTensor.identity(doubled(dims))) <= 1e-8 * frobenius_norm(j)
    red = block_matrix(q.H @ m @ q)
    n = int(np.prod(dims))
    scale = np.linalg.norm(m.unfold(), 2)
    assert np.abs(red[n:, :n]).max() <= 1e-8 * scale
    assert np.allclose(red[n:, n:], -red[:n, :n].conj().T, atol=1e-8 * scale)
    assert np.all(sh.eigenvalues.real < 0)
    assert np.allclose(np.tril(sh.T.unfold(), -1), 0, atol=1e-8 * scale)
    # E = Q2 Q1^-1 solves A^H E + E A - E G E + K = O
    e = sh.solution()
    res = blocks.A.H @ e + e @ blocks.A - e @ blocks.G @ e + blocks.K
    assert frobenius_norm(res) <= 1e-7 * (1 + frobenius_norm(e)) ** 2 * scale


def test_schur_hamiltonian_imaginary_axis():
    one = PairedTensor.identity((1,))
    m = hamiltonian_assemble(HamiltonianBlocks(0 * one, one, -1.0 * one))
    with pytest.raises(ImaginaryAxisEigenvalue):
        schur_hamiltonian(m)


def random_unitary_symplectic(rng, dims):
    n = int(np.prod(dims))
    w = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    v = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    w, v = 0.5 * (w - w.conj().T), 0.5 * (v + v.conj().T)
    return from_block_matrix(sla.expm(np.block([[w, v], [-v, w]])), dims)


@given(seeds, dims_strategy(order=(1, 2), max_dim=3))
def test_symplectic_svd(seed, dims):
    rng = np.random.default_rng(seed)
    q = random_unitary_symplectic(rng, dims)
    assert symplectic_check(q, 1e-9)
    svd = symplectic_svd(q)
    n = int(np.prod(dims))
    u, v, s, d = (t.unfold() for t in (svd.U, svd.V, svd.S, svd.D))
    z = np.zeros_like(u)
    lhs = np.block([[u, z], [z, u]]).conj().T @ block_matrix(q) @ np.block([[v, z], [z, v]])
    assert np.allclose(lhs, np.block([[s, d], [-d, s]]), atol=1e-8)
    assert np.allclose(s, np.diag(np.diag(s))) and np.allclose(d, np.diag(np.diag(d)))
    assert np.allclose(s @ s + d @ d, np.eye(n), atol=1e-8)
    assert np.all(np.diag(s).real >= -1e-12)


def test_symplectic_svd_rejects_non_symplectic():
    rng = np.random.default_rng(2)
    with pytest.raises(NotSymplectic):
        symplectic_svd(rand_paired(rng, (4, 2)))


def test_symplectic_svd_of_identity_and_j():
    for q in (PairedTensor.identity((4,)), j_tensor((2,))):
        svd = symplectic_svd(q)
        s, d = svd.S.unfold(), svd.D.unfold()
        assert np.allclose(s @ s + d @ d, np.eye(2))
