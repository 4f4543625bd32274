"""Structured paired tensors: generalized CPD, Kronecker product and Vec.

A generalized CPD (GCPD) tensor is a sum of ``R`` matrix outer products
``A_r^(1) o ... o A_r^(N)``. ``R`` is the representation size (``terms``),
never claimed to be the minimal CP rank.
"""
from __future__ import annotations

from math import prod
from typing import Sequence

import numpy as np

from .errors import ShapeMismatch
from .tensor import PairedTensor, PlainTensor, Shape, _dims


class GcpdTensor:
    """Sum of outer products of matrices.

    Parameters
    ----------
    factors : sequence of array_like
        One array per mode, shaped ``(R, I_n, J_n)``. A list of 2-D matrices
        is accepted for a single term.
    """

    __slots__ = ("factors",)

    def __init__(self, factors: Sequence):
        mats = [np.asarray(f, dtype=complex) for f in factors]
        if not mats:
            raise ShapeMismatch("a GCPD tensor needs at least one mode")
        if all(m.ndim == 2 for m in mats):
            mats = [m[None] for m in mats]
        if any(m.ndim != 3 for m in mats):
            raise ShapeMismatch("GCPD factors must be (R, I_n, J_n) arrays")
        terms = {m.shape[0] for m in mats}
        if len(terms) != 1 or 0 in terms:
            raise ShapeMismatch(f"all modes need the same positive number of terms, got {sorted(terms)}")
        self.factors = tuple(m.copy() for m in mats)
        for m in self.factors:
            m.flags.writeable = False

    @classmethod
    def rank_one(cls, *mats) -> GcpdTensor:
        return cls([np.asarray(m)[None] for m in mats])

    @classmethod
    def from_terms(cls, terms: Sequence[Sequence]) -> GcpdTensor:
        """Build from a list of terms, each a list of N matrices."""
        n = len(terms[0])
        if any(len(t) != n for t in terms):
            raise ShapeMismatch("every term needs the same number of factors")
        try:
            return cls([np.stack([np.asarray(t[k], dtype=complex) for t in terms]) for k in range(n)])
        except ValueError as exc:
            raise ShapeMismatch(f"factor sizes differ across terms: {exc}") from None

    @property
    def terms(self) -> int:
        return self.factors[0].shape[0]

    @property
    def order(self) -> int:
        return len(self.factors)

    @property
    def shape(self) -> Shape:
        return Shape([f.shape[1] for f in self.factors], [f.shape[2] for f in self.factors])

    def term(self, r: int) -> list[np.ndarray]:
        return [f[r] for f in self.factors]

    def densify(self) -> PairedTensor:
        out = None
        for r in range(self.terms):
            t = PairedTensor.outer(*self.term(r))
            out = t if out is None else out + t
        return out

    def conj_transpose(self) -> GcpdTensor:
        return GcpdTensor([np.conj(np.swapaxes(f, 1, 2)) for f in self.factors])

    def transpose(self) -> GcpdTensor:
        return GcpdTensor([np.swapaxes(f, 1, 2) for f in self.factors])

    def __add__(self, other: GcpdTensor) -> GcpdTensor:
        if self.shape != other.shape:
            raise ShapeMismatch(f"shapes {self.shape} and {other.shape} differ")
        return GcpdTensor([np.concatenate([a, b]) for a, b in zip(self.factors, other.factors)])

    def __mul__(self, alpha):
        if not np.isscalar(alpha):
            return NotImplemented
        first = alpha * self.factors[0]
        return GcpdTensor([first, *self.factors[1:]])

    __rmul__ = __mul__

    def __repr__(self):
        return f"GcpdTensor(shape={self.shape}, terms={self.terms})"


def _check_conformal(a: GcpdTensor, b: GcpdTensor):
    if a.order != b.order or a.shape.col_dims != b.shape.row_dims:
        raise ShapeMismatch(f"GCPD shapes {a.shape} and {b.shape} are not conformal")


def gcpd_einstein(a: GcpdTensor, b: GcpdTensor) -> GcpdTensor:
    """Einstein product kept in GCPD form; term ``t = r + s*R`` (0-based)."""
    _check_conformal(a, b)
    out = []
    for fa, fb in zip(a.factors, b.factors):
        # prod[s, r] = fa[r] @ fb[s], flattened with r fastest
        prod_ = np.einsum("rij,sjk->srik", fa, fb)
        out.append(prod_.reshape(-1, fa.shape[1], fb.shape[2]))
    return GcpdTensor(out)


def mode_product(x, n: int, m) -> PlainTensor:
    """Mode-n product ``X x_n M`` with ``(X x_n M)[.., j, ..] = sum_i X[.., i, ..] M[j, i]``.

    ``x`` may be a PlainTensor or a raw ndarray; ``n`` is 1-based.
    """
    arr = x.array if isinstance(x, PlainTensor) else np.asarray(x)
    mat = np.asarray(m)
    if not 1 <= n <= arr.ndim:
        raise ShapeMismatch(f"mode {n} out of range 1..{arr.ndim}")
    if mat.ndim != 2 or mat.shape[1] != arr.shape[n - 1]:
        raise ShapeMismatch(
            f"matrix of shape {mat.shape} cannot act on mode {n} of size {arr.shape[n - 1]}"
        )
    out = np.moveaxis(np.tensordot(mat, arr, axes=([1], [n - 1])), 0, n - 1)
    return PlainTensor(out) if isinstance(x, PlainTensor) else out


def _rank_one_factors(a: GcpdTensor) -> list[np.ndarray]:
    if a.terms != 1:
        raise ShapeMismatch(f"expected a rank-one GCPD tensor, got {a.terms} terms")
    return a.term(0)


def rankone_left_apply(a: GcpdTensor, e: PairedTensor) -> PairedTensor:
    """``A * E`` for rank-one ``A`` as odd-mode products ``E x_1 A1 x_3 A2 ...``."""
    mats = _rank_one_factors(a)
    if a.shape.col_dims != e.shape.row_dims:
        raise ShapeMismatch(f"cannot form {a.shape} * {e.shape}")
    arr = e.interleaved()
    for k, m in enumerate(mats):
        arr = mode_product(arr, 2 * k + 1, m)
    return PairedTensor.from_interleaved(arr)


def rankone_right_apply(e: PairedTensor, a: GcpdTensor) -> PairedTensor:
    """``E * A`` for rank-one ``A`` as even-mode products ``E x_2 A1^T x_4 A2^T ...``."""
    mats = _rank_one_factors(a)
    if e.shape.col_dims != a.shape.row_dims:
        raise ShapeMismatch(f"cannot form {e.shape} * {a.shape}")
    arr = e.interleaved()
    for k, m in enumerate(mats):
        arr = mode_product(arr, 2 * k + 2, m.T)
    return PairedTensor.from_interleaved(arr)


def rankone_flops(e_shape: Shape, a_shape: Shape) -> tuple[int, int]:
    """Multiplication counts ``(dense, mode_products)`` for ``E * A`` with rank-one ``A``."""
    rows = e_shape.n_rows
    dense = rows * e_shape.n_cols * a_shape.n_cols
    fast = 0
    cur = list(e_shape.col_dims)
    for k in range(a_shape.order):
        # mode k: J_k -> K_k, every other index fixed
        fast += rows * prod(cur) // cur[k] * cur[k] * a_shape.col_dims[k]
        cur[k] = a_shape.col_dims[k]
    return dense, fast


# Kronecker and Vec ----------------------------------------------------------

def _pad(a: PairedTensor, order: int) -> PairedTensor:
    if a.order == order:
        return a
    extra = (1,) * (order - a.order)
    shape = Shape(a.shape.row_dims + extra, a.shape.col_dims + extra)
    return PairedTensor(a.data, shape)


def kron(a: PairedTensor, b: PairedTensor) -> PairedTensor:
    """Tensor Kronecker product; block ``k`` of the result is ``A_k * B``.

    Operands of different order are padded with unit trailing modes.
    """
    n = max(a.order, b.order)
    a, b = _pad(a, n), _pad(b, n)
    outer = np.multiply.outer(a.array, b.array)
    # axes: a rows (0..n-1), a cols (n..2n-1), b rows (2n..3n-1), b cols (3n..4n-1)
    perm = [p for k in range(n) for p in (k, 2 * n + k)] + [p for k in range(n) for p in (n + k, 3 * n + k)]
    rows = tuple(a.shape.row_dims[k] * b.shape.row_dims[k] for k in range(n))
    cols = tuple(a.shape.col_dims[k] * b.shape.col_dims[k] for k in range(n))
    arr = np.transpose(outer, perm).reshape(rows + cols)
    return PairedTensor(arr)


def vec(x: PairedTensor) -> PlainTensor:
    """Mode column block tensor whose block ``k`` is ``X[:, k1, ..., :, kN]``."""
    n = x.order
    perm = [p for k in range(n) for p in (n + k, k)]
    dims = tuple(x.shape.col_dims[k] * x.shape.row_dims[k] for k in range(n))
    return PlainTensor(np.transpose(x.array, perm).reshape(dims))


def unvec(y: PlainTensor, shape: Shape) -> PairedTensor:
    """Inverse of ``vec`` for the given paired shape."""
    n = shape.order
    want = tuple(shape.col_dims[k] * shape.row_dims[k] for k in range(n))
    if y.dims != want:
        raise ShapeMismatch(f"tensor of dims {y.dims} cannot unvec to {shape} (needs {want})")
    split = [d for k in range(n) for d in (shape.col_dims[k], shape.row_dims[k])]
    arr = y.array.reshape(split)
    perm = [2 * k + 1 for k in range(n)] + [2 * k for k in range(n)]
    return PairedTensor(np.transpose(arr, perm))


def gcpd_kron(a: GcpdTensor, b: GcpdTensor) -> GcpdTensor:
    """Factorwise Kronecker; term ``t = r + s*R``."""
    if a.order != b.order:
        raise ShapeMismatch("GCPD Kronecker needs equal orders")
    out = []
    for fa, fb in zip(a.factors, b.factors):
        terms = [np.kron(fa[r], fb[s]) for s in range(b.terms) for r in range(a.terms)]
        out.append(np.stack(terms))
    return GcpdTensor(out)


def gcpd_vec(a: GcpdTensor) -> list[list[np.ndarray]]:
    """Factorwise Vec: term ``r`` is the outer product of the vectors ``vec(A_r^(n))``."""
    return [[f[r].reshape(-1, order="F") for f in a.factors] for r in range(a.terms)]


def densify_vec(terms: list[list[np.ndarray]]) -> PlainTensor:
    out = None
    for vecs in terms:
        t = vecs[0]
        for v in vecs[1:]:
            t = np.multiply.outer(t, v)
        out = t if out is None else out + t
    return PlainTensor(out)


def transpose_permutation_tensor(dims) -> PairedTensor:
    """Tensor ``P`` with ``vec(E^T) = P * vec(E)`` for ``E`` of row/col dims ``dims``."""
    dims = _dims(dims)
    n = len(dims)
    shape = Shape(dims, dims)
    size = shape.n_rows * shape.n_cols
    # vec(E) holds E[i, j] at mode-wise index j_k*I_k + i_k
    idx = np.arange(size).reshape(shape.row_dims + shape.col_dims, order="F")
    src = vec(PairedTensor(idx.astype(complex), shape)).data.real.astype(int)
    dst = vec(PairedTensor(idx.astype(complex), shape).T).data.real.astype(int)
    mat = np.zeros((size, size))
    mat[np.arange(size), _position(src)[dst]] = 1.0
    vdims = tuple(d * d for d in dims)
    return PairedTensor.fold(mat, Shape(vdims, vdims))


def _position(perm: np.ndarray) -> np.ndarray:
    pos = np.empty_like(perm)
    pos[perm] = np.arange(perm.size)
    return pos


def kronsum_tensor(a, order: int) -> GcpdTensor:
    """``sum_n I o ... o A^T o ... o I`` with ``A^T`` in slot ``n``."""
    mat = np.asarray(a, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ShapeMismatch(f"kronsum_tensor needs a square matrix, got {mat.shape}")
    if order < 1:
        raise ShapeMismatch("order must be at least 1")
    eye = np.eye(mat.shape[0])
    terms = [[mat.T if k == n else eye for k in range(order)] for n in range(order)]
    return GcpdTensor.from_terms(terms)


def rankone_norms(a: GcpdTensor, which: str = "frobenius") -> float:
    """Norm of a rank-one tensor as the product of its factor norms."""
    mats = _rank_one_factors(a)
    ordmap = {"frobenius": "fro", "spectral": 2}
    if which not in ordmap:
        raise ValueError(f"unknown norm {which!r}")
    return float(prod(np.linalg.norm(m, ordmap[which]) for m in mats))
