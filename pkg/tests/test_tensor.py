import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import dims_strategy, rand_paired, seeds
from rtk import examples as ex
from rtk.errors import NotHermitian, ShapeMismatch, SingularTensor
from rtk.structured import kron
from rtk.tensor import (
    Blocking,
    PairedTensor,
    PlainTensor,
    Shape,
    apply,
    block2x2,
    col_block,
    conj_transpose,
    einstein_product,
    extract_block,
    frobenius_norm,
    inner_product,
    inverse,
    is_hermitian,
    is_positive_semidefinite,
    ivec,
    perfect_shuffle,
    row_block,
    shuffle_permutation,
    solve,
    spectral_norm,
    split2x2,
    transpose,
)


def loop_einstein(a, b):
    """Explicit summation over every column multi-index."""
    n = a.order
    out = np.zeros(a.shape.row_dims + b.shape.col_dims, dtype=complex)
    for i in itertools.product(*map(range, a.shape.row_dims)):
        for k in itertools.product(*map(range, b.shape.col_dims)):
            s = 0
            for j in itertools.product(*map(range, a.shape.col_dims)):
                s += a.array[i + j] * b.array[j + k]
            out[i + k] = s
    assert out.ndim == 2 * n
    return out


def test_ivec_example():
    assert ivec((3, 2), (3, 2)) == 6
    assert ivec((1, 1), (3, 2)) == 1
    assert ivec((2, 1), (3, 2)) == 2


@given(dims_strategy(max_dim=4))
def test_ivec_bijective(dims):
    # reversed product enumerates the first index fastest
    seen = [ivec(tuple(reversed(i)), dims) for i in itertools.product(*[range(1, d + 1) for d in reversed(dims)])]
    assert seen == list(range(1, math.prod(dims) + 1))


def test_ivec_rejects_out_of_range():
    with pytest.raises(IndexError):
        ivec((4, 1), (3, 2))
    with pytest.raises(ShapeMismatch):
        ivec((1,), (3, 2))


def test_unfold_identity():
    assert np.array_equal(PairedTensor.identity((2, 3)).unfold(), np.eye(6))


def test_unfold_entry_positions():
    rng = np.random.default_rng(0)
    a = rand_paired(rng, (2, 3), (3, 2))
    m = a.unfold()
    for i in itertools.product(range(1, 3), range(1, 4)):
        for j in itertools.product(range(1, 4), range(1, 3)):
            assert m[ivec(i, (2, 3)) - 1, ivec(j, (3, 2)) - 1] == a.array[tuple(x - 1 for x in i + j)]


def test_unfold_is_zero_copy_and_read_only():
    a = rand_paired(np.random.default_rng(1), (2, 2))
    assert np.shares_memory(a.unfold(), a.array)
    with pytest.raises(ValueError):
        a.array[0, 0, 0, 0] = 1.0


def test_einstein_matches_loops():
    rng = np.random.default_rng(2)
    a, b = rand_paired(rng, (2, 2)), rand_paired(rng, (2, 2))
    assert np.allclose(einstein_product(a, b).array, loop_einstein(a, b), atol=1e-13)


def test_einstein_rank_one():
    rng = np.random.default_rng(3)
    a1, a2, b1, b2 = (rng.standard_normal((2, 2)) for _ in range(4))
    lhs = einstein_product(PairedTensor.outer(a1, a2), PairedTensor.outer(b1, b2))
    assert np.allclose(lhs.array, PairedTensor.outer(a1 @ b1, a2 @ b2).array, atol=1e-14)


def test_einstein_shape_mismatch():
    rng = np.random.default_rng(4)
    with pytest.raises(ShapeMismatch):
        einstein_product(rand_paired(rng, (2, 2), (2, 3)), rand_paired(rng, (2, 2)))


def test_apply_example1_all_ones():
    a = ex.example1_system().A
    x = PlainTensor(np.ones((3, 2)))
    want = np.zeros((3, 2), dtype=complex)
    for i1, i2, j1, j2 in itertools.product(range(3), range(2), range(3), range(2)):
        want[i1, i2] += a.array[i1, i2, j1, j2]
    assert np.allclose(apply(a, x).array, want)


def test_apply_identity_and_zero():
    x = PlainTensor(np.arange(6.0).reshape(3, 2))
    assert np.array_equal(apply(PairedTensor.identity((3, 2)), x).array, x.array)
    assert not np.any(apply(PairedTensor.zeros(Shape((3, 2), (3, 2))), x).array)


@given(seeds, dims_strategy(), dims_strategy(), dims_strategy())
def test_unfolding_homomorphism(seed, i, j, k):
    n = min(len(i), len(j), len(k))
    i, j, k = i[:n], j[:n], k[:n]
    rng = np.random.default_rng(seed)
    a, b = rand_paired(rng, i, j), rand_paired(rng, j, k)
    lhs = einstein_product(a, b)
    ref = np.tensordot(a.array, b.array, axes=(list(range(n, 2 * n)), list(range(n))))
    assert np.allclose(lhs.array, ref, atol=1e-12)
    assert np.allclose(lhs.unfold(), a.unfold() @ b.unfold(), atol=1e-12)


@given(seeds, dims_strategy(), dims_strategy())
def test_fold_unfold_roundtrip(seed, i, j):
    n = min(len(i), len(j))
    rng = np.random.default_rng(seed)
    a = rand_paired(rng, i[:n], j[:n])
    assert np.array_equal(PairedTensor.fold(a.unfold(), a.shape).array, a.array)
    m = rng.standard_normal((a.shape.n_rows, a.shape.n_cols))
    assert np.array_equal(PairedTensor.fold(m, a.shape).unfold(), m)


def test_flat_constructor_and_interleaved():
    rng = np.random.default_rng(5)
    a = rand_paired(rng, (2, 3), (3, 2))
    assert np.array_equal(PairedTensor(a.data, a.shape).array, a.array)
    assert np.array_equal(PairedTensor.from_interleaved(a.interleaved()).array, a.array)


def test_conj_transpose_and_transpose():
    rng = np.random.default_rng(6)
    a = rand_paired(rng, (2, 3), (3, 1))
    assert np.array_equal(conj_transpose(conj_transpose(a)).array, a.array)
    assert np.array_equal(conj_transpose(a).unfold(), a.unfold().conj().T)
    assert a.H.shape == Shape((3, 1), (2, 3))
    a1, a2 = rng.standard_normal((2, 3)), rng.standard_normal((3, 1))
    assert np.array_equal(transpose(PairedTensor.outer(a1, a2)).array, PairedTensor.outer(a1.T, a2.T).array)
    # elementwise definition of the transpose
    t = transpose(a)
    for i in itertools.product(range(2), range(3)):
        for j in itertools.product(range(3), range(1)):
            assert t.array[j + i] == a.array[i + j]


def test_example1_published_solution_is_hermitian():
    e = ex.example1_published_e()
    assert is_hermitian(e, 1e-6)
    assert not is_hermitian(PairedTensor.outer(ex.A1, ex.A2))


def test_inverse():
    eye = PairedTensor.identity((2, 3))
    assert np.allclose(inverse(eye).array, eye.array)
    rng = np.random.default_rng(7)
    a1, a2 = rng.standard_normal((3, 3)), rng.standard_normal((2, 2))
    inv = inverse(PairedTensor.outer(a1, a2))
    assert np.allclose(inv.array, PairedTensor.outer(np.linalg.inv(a1), np.linalg.inv(a2)).array)
    a = rand_paired(rng, (2, 2))
    assert np.allclose(einstein_product(a, inverse(a)).unfold(), np.eye(4), atol=1e-12)
    assert np.allclose(einstein_product(inverse(a), a).unfold(), np.eye(4), atol=1e-12)


def test_inverse_singular():
    d = PairedTensor.fold(np.diag([1.0, 2.0, 0.0, 3.0]), Shape((2, 2), (2, 2)))
    with pytest.raises(SingularTensor):
        inverse(d)
    with pytest.raises(SingularTensor):
        solve(d, PlainTensor(np.ones((2, 2))))


def test_solve_matches_inverse():
    rng = np.random.default_rng(8)
    a, b = rand_paired(rng, (2, 3)), rand_paired(rng, (2, 3), (1, 2))
    assert np.allclose(solve(a, b).array, einstein_product(inverse(a), b).array)


def test_block2x2_identity():
    eye, zero = PairedTensor.identity((2, 3)), PairedTensor.zeros(Shape((2, 3), (2, 3)))
    assert np.array_equal(block2x2(eye, zero, zero, eye, 1).array, PairedTensor.identity((4, 3)).array)


def test_row_times_column_block_loops():
    rng = np.random.default_rng(9)
    a, b, c, d = (rand_paired(rng, (2, 2)) for _ in range(4))
    lhs = einstein_product(row_block([a, b], 1), col_block([c, d], 1))
    want = loop_einstein(a, c) + loop_einstein(b, d)
    assert np.allclose(lhs.array, want, atol=1e-12)


@given(seeds, st.integers(2, 3), st.data())
def test_block_laws(seed, order, data):
    rng = np.random.default_rng(seed)
    i = data.draw(st.tuples(*[st.integers(1, 2)] * order))
    j = data.draw(st.tuples(*[st.integers(1, 2)] * order))
    l_ = data.draw(st.tuples(*[st.integers(1, 2)] * order))
    for n in range(1, order + 1):
        a, b = rand_paired(rng, i, j), rand_paired(rng, i, j)
        c, d = rand_paired(rng, j, i), rand_paired(rng, j, i)
        p, q = rand_paired(rng, l_, i), rand_paired(rng, i, l_)
        assert np.allclose(row_block([p @ a, p @ b], n).array, (p @ row_block([a, b], n)).array, atol=1e-12)
        assert np.allclose(col_block([c @ q, d @ q], n).array, (col_block([c, d], n) @ q).array, atol=1e-12)
        assert np.allclose((row_block([a, b], n) @ col_block([c, d], n)).array, (a @ c + b @ d).array,
                           atol=1e-12)


@given(seeds, dims_strategy(order=(1, 2, 3)), st.data())
def test_unfolding_lemma(seed, dims, data):
    n = data.draw(st.integers(1, len(dims)))
    rng = np.random.default_rng(seed)
    blocks = [rand_paired(rng, dims) for _ in range(4)]
    perm = shuffle_permutation(n, dims)
    inner = np.block([[blocks[0].unfold(), blocks[1].unfold()], [blocks[2].unfold(), blocks[3].unfold()]])
    assert np.array_equal(block2x2(*blocks, n).unfold(), perm @ inner @ perm.T)


def test_shuffle_permutation_trivial_cases():
    assert np.array_equal(shuffle_permutation(1, (3,)), np.eye(6))
    assert np.array_equal(shuffle_permutation(2, (2, 3)), np.eye(12))
    p = shuffle_permutation(1, (2, 3, 2))
    assert np.array_equal(p @ p.T, np.eye(24))


def test_perfect_shuffle_definition():
    z = np.arange(6)
    # gathers z(1:r:s), z(2:r:s), ... with s = q r
    assert np.array_equal(perfect_shuffle(3, 2) @ z, [0, 2, 4, 1, 3, 5])


def test_split2x2_roundtrip():
    rng = np.random.default_rng(10)
    blocks = [rand_paired(rng, (2, 3)) for _ in range(4)]
    for n in (1, 2):
        parts = split2x2(block2x2(*blocks, n), n)
        for got, want in zip(parts, blocks):
            assert np.array_equal(got.array, want.array)


def test_extract_block():
    rng = np.random.default_rng(11)
    a = rand_paired(rng, (2, 3))
    whole = Blocking(tuple((d,) for d in a.shape.interleaved))
    assert np.array_equal(extract_block(a, whole, (0, 0, 0, 0)).array, a.array)
    blocks = [rand_paired(rng, (2, 3)) for _ in range(4)]
    m = block2x2(*blocks, 1)
    top = Blocking(((2, 2), (2, 2), (3,), (3,)))
    assert np.array_equal(extract_block(m, top, (0, 0, 0, 0)).array, blocks[0].array)
    assert np.array_equal(extract_block(m, top, (1, 0, 0, 0)).array, blocks[2].array)
    with pytest.raises(IndexError):
        extract_block(m, top, (2, 0, 0, 0))


def test_extract_block_of_kron():
    rng = np.random.default_rng(12)
    a, b = rand_paired(rng, (2, 2)), rand_paired(rng, (3, 2))
    k = kron(a, b)
    blocking = Blocking.uniform(b.shape.interleaved, a.shape.interleaved)
    for idx in itertools.product(*map(range, a.shape.interleaved)):
        want = a.interleaved()[idx] * b.interleaved()
        assert np.allclose(extract_block(k, blocking, idx).interleaved(), want)


def test_norms():
    assert frobenius_norm(PairedTensor.identity((3, 2))) == pytest.approx(math.sqrt(6))
    p = ex.example1_problem()
    assert frobenius_norm(p.G) == pytest.approx(1.0)
    assert frobenius_norm(p.K) == pytest.approx(1.0)
    x = PlainTensor(np.array([[1.0, 1j], [2.0, 0.0]]))
    assert inner_product(x, x) == pytest.approx(6.0)


@given(seeds, dims_strategy(order=(1, 2)))
def test_spectral_norm_bounds(seed, dims):
    rng = np.random.default_rng(seed)
    a = rand_paired(rng, dims)
    x = rand_paired(rng, dims, (1,) * len(dims))
    assert spectral_norm(a) <= frobenius_norm(a) * (1 + 1e-12)
    assert frobenius_norm(a @ x) <= spectral_norm(a) * frobenius_norm(x) * (1 + 1e-12)


def test_positive_semidefinite():
    ok, lam = is_positive_semidefinite(PairedTensor.identity((2, 2)))
    assert ok and lam == pytest.approx(1.0)
    ok, lam = is_positive_semidefinite(PairedTensor.fold(np.diag([1.0, -1.0]), Shape((2,), (2,))))
    assert not ok and lam == pytest.approx(-1.0)
    with pytest.raises(NotHermitian):
        is_positive_semidefinite(PairedTensor.fold(np.array([[0.0, 1.0], [0.0, 0.0]]), Shape((2,), (2,))))


def test_example1_solution_positive_definite(example1):
    ok, lam = is_positive_semidefinite(example1[1], 1e-8)
    assert ok and abs(lam - ex.PSD_MIN) < 1e-3


def test_shape_errors():
    with pytest.raises(ShapeMismatch):
        Shape((2, 2), (2,))
    with pytest.raises(ShapeMismatch):
        PairedTensor(np.zeros(5), Shape((2,), (2,)))
    with pytest.raises(ShapeMismatch):
        PairedTensor.fold(np.zeros((3, 3)), Shape((2,), (2,)))
