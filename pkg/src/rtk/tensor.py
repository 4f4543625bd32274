"""Even-order paired tensors under the Einstein product.

A paired tensor of order 2N has entries ``A[i1, j1, ..., iN, jN]``. Storage
is the column-major layout of the unfolding matrix: the backing array has
shape ``row_dims + col_dims`` in Fortran order, so ``unfold`` is a reshape
view and the flat data index of entry ``(i, j)`` is
``(ivec(j, J) - 1) * |I| + ivec(i, I) - 1``.

Conventions: mode numbers ``n`` are 1-based as in mode-n products; array,
entry and block indices are 0-based. ``ivec`` alone follows the 1-based
mixed-radix formula.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Sequence
import warnings

import numpy as np
import scipy.linalg as sla

from .errors import NotHermitian, ShapeMismatch, SingularTensor

DEFAULT_TOL = 1e-10


def _dims(dims) -> tuple[int, ...]:
    out = tuple(int(d) for d in dims)
    if not out:
        raise ShapeMismatch("dimension vector must be non-empty")
    if any(d < 1 for d in out):
        raise ShapeMismatch(f"dimensions must be positive, got {out}")
    return out


@dataclass(frozen=True)
class Shape:
    row_dims: tuple[int, ...]
    col_dims: tuple[int, ...]

    def __post_init__(self):
        rows = _dims(self.row_dims)
        cols = _dims(self.col_dims)
        if len(rows) != len(cols):
            raise ShapeMismatch(f"row_dims {rows} and col_dims {cols} differ in length")
        object.__setattr__(self, "row_dims", rows)
        object.__setattr__(self, "col_dims", cols)

    @property
    def order(self) -> int:
        return len(self.row_dims)

    @property
    def n_rows(self) -> int:
        return prod(self.row_dims)

    @property
    def n_cols(self) -> int:
        return prod(self.col_dims)

    @property
    def is_square(self) -> bool:
        return self.row_dims == self.col_dims

    @property
    def interleaved(self) -> tuple[int, ...]:
        return tuple(d for pair in zip(self.row_dims, self.col_dims) for d in pair)

    def transpose(self) -> Shape:
        return Shape(self.col_dims, self.row_dims)

    def __str__(self):
        return "x".join(str(d) for d in self.interleaved)


def ivec(i: Sequence[int], dims: Sequence[int]) -> int:
    """Linear position of the 1-based multi-index ``i`` (first index fastest).

    >>> ivec((3, 2), (3, 2))
    6
    """
    dims = _dims(dims)
    if len(i) != len(dims):
        raise ShapeMismatch(f"index {tuple(i)} does not match dims {dims}")
    pos = 0
    stride = 1
    for ik, dk in zip(i, dims):
        if not 1 <= ik <= dk:
            raise IndexError(f"index {tuple(i)} out of range for dims {dims}")
        pos += (ik - 1) * stride
        stride *= dk
    return pos + 1


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


class PlainTensor:
    """Dense order-N tensor; flat data is ordered by ``ivec``."""

    __slots__ = ("dims", "_array")

    def __init__(self, array, dims=None):
        arr = np.asarray(array, dtype=complex)
        if dims is not None:
            dims = _dims(dims)
            if arr.ndim == 1 and arr.size == prod(dims):
                arr = arr.reshape(dims, order="F")
            elif arr.shape != dims:
                raise ShapeMismatch(f"data of shape {arr.shape} cannot hold dims {dims}")
        self.dims = _dims(arr.shape)
        self._array = _frozen(np.asfortranarray(arr).copy(order="F"))

    @classmethod
    def zeros(cls, dims) -> PlainTensor:
        return cls(np.zeros(_dims(dims), dtype=complex))

    @property
    def order(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return self._array.size

    @property
    def array(self) -> np.ndarray:
        """Read-only view indexed ``X[j1, ..., jN]``."""
        return self._array

    @property
    def data(self) -> np.ndarray:
        """Flat read-only view in ``ivec`` order."""
        return self._array.reshape(-1, order="F")

    def conj(self) -> PlainTensor:
        return PlainTensor(self._array.conj())

    def __add__(self, other):
        _check_same_dims(self, other)
        return PlainTensor(self._array + other._array)

    def __sub__(self, other):
        _check_same_dims(self, other)
        return PlainTensor(self._array - other._array)

    def __neg__(self):
        return PlainTensor(-self._array)

    def __mul__(self, alpha):
        if not np.isscalar(alpha):
            return NotImplemented
        return PlainTensor(alpha * self._array)

    __rmul__ = __mul__

    def __truediv__(self, alpha):
        return PlainTensor(self._array / alpha)

    def __repr__(self):
        return f"PlainTensor(dims={self.dims})"


def _check_same_dims(x, y):
    if not isinstance(y, type(x)):
        raise TypeError(f"cannot combine {type(x).__name__} with {type(y).__name__}")
    if isinstance(x, PairedTensor):
        if x.shape != y.shape:
            raise ShapeMismatch(f"shapes {x.shape} and {y.shape} differ")
    elif x.dims != y.dims:
        raise ShapeMismatch(f"dims {x.dims} and {y.dims} differ")


class PairedTensor:
    """Dense even-order paired tensor.

    Parameters
    ----------
    array : array_like
        Either an array of shape ``row_dims + col_dims`` (grouped layout,
        ``A[i1, ..., iN, j1, ..., jN]``) or a flat array in canonical order
        when ``shape`` is given.
    shape : Shape, optional
        Required when ``array`` is flat or when N cannot be inferred.
    """

    __slots__ = ("shape", "_array")

    def __init__(self, array, shape: Shape | None = None):
        arr = np.asarray(array, dtype=complex)
        if shape is None:
            if arr.ndim % 2 or arr.ndim == 0:
                raise ShapeMismatch("grouped array must have an even number of axes")
            n = arr.ndim // 2
            shape = Shape(arr.shape[:n], arr.shape[n:])
        full = shape.row_dims + shape.col_dims
        if arr.shape != full:
            if arr.size != shape.n_rows * shape.n_cols:
                raise ShapeMismatch(
                    f"data has {arr.size} entries, shape {shape} needs "
                    f"{shape.n_rows * shape.n_cols}"
                )
            arr = arr.reshape(full, order="F")
        self.shape = shape
        self._array = _frozen(np.array(arr, dtype=complex, order="F"))

    # construction -------------------------------------------------------
    @classmethod
    def fold(cls, matrix, shape: Shape) -> PairedTensor:
        """Inverse of ``unfold``."""
        mat = np.asarray(matrix, dtype=complex)
        if mat.shape != (shape.n_rows, shape.n_cols):
            raise ShapeMismatch(
                f"matrix of shape {mat.shape} cannot fold to {shape} "
                f"({shape.n_rows}x{shape.n_cols})"
            )
        return cls(np.asfortranarray(mat).reshape(shape.row_dims + shape.col_dims, order="F"), shape)

    @classmethod
    def from_interleaved(cls, array) -> PairedTensor:
        """Build from an array indexed ``A[i1, j1, ..., iN, jN]``."""
        arr = np.asarray(array, dtype=complex)
        if arr.ndim % 2 or arr.ndim == 0:
            raise ShapeMismatch("interleaved array must have an even number of axes")
        n = arr.ndim // 2
        perm = [2 * k for k in range(n)] + [2 * k + 1 for k in range(n)]
        return cls(np.transpose(arr, perm))

    @classmethod
    def identity(cls, dims) -> PairedTensor:
        dims = _dims(dims)
        return cls.fold(np.eye(prod(dims)), Shape(dims, dims))

    @classmethod
    def zeros(cls, shape: Shape) -> PairedTensor:
        return cls(np.zeros(shape.row_dims + shape.col_dims, dtype=complex), shape)

    @classmethod
    def outer(cls, *factors) -> PairedTensor:
        """Rank-one tensor ``A1 o A2 o ... o AN`` from matrices."""
        mats = [np.atleast_2d(np.asarray(f, dtype=complex)) for f in factors]
        if not mats or any(m.ndim != 2 for m in mats):
            raise ShapeMismatch("outer product needs at least one matrix factor")
        shape = Shape([m.shape[0] for m in mats], [m.shape[1] for m in mats])
        # unfolding of A1 o ... o AN is AN kron ... kron A1
        unf = mats[-1]
        for m in reversed(mats[:-1]):
            unf = np.kron(unf, m)
        return cls.fold(unf, shape)

    # views ----------------------------------------------------------------
    @property
    def order(self) -> int:
        return self.shape.order

    @property
    def array(self) -> np.ndarray:
        """Read-only grouped view ``A[i1, ..., iN, j1, ..., jN]``."""
        return self._array

    @property
    def data(self) -> np.ndarray:
        """Flat read-only view in canonical (column-major unfolding) order."""
        return self._array.reshape(-1, order="F")

    def unfold(self) -> np.ndarray:
        return self._array.reshape(self.shape.n_rows, self.shape.n_cols, order="F")

    def interleaved(self) -> np.ndarray:
        n = self.order
        perm = [p for k in range(n) for p in (k, n + k)]
        return np.transpose(self._array, perm)

    def entry(self, i: Sequence[int], j: Sequence[int]) -> complex:
        return complex(self._array[tuple(i) + tuple(j)])

    # algebra --------------------------------------------------------------
    @property
    def H(self) -> PairedTensor:
        return conj_transpose(self)

    @property
    def T(self) -> PairedTensor:
        return transpose(self)

    def conj(self) -> PairedTensor:
        return PairedTensor(self._array.conj(), self.shape)

    def __add__(self, other):
        _check_same_dims(self, other)
        return PairedTensor(self._array + other._array, self.shape)

    def __sub__(self, other):
        _check_same_dims(self, other)
        return PairedTensor(self._array - other._array, self.shape)

    def __neg__(self):
        return PairedTensor(-self._array, self.shape)

    def __mul__(self, alpha):
        if not np.isscalar(alpha):
            return NotImplemented
        return PairedTensor(alpha * self._array, self.shape)

    __rmul__ = __mul__

    def __truediv__(self, alpha):
        return PairedTensor(self._array / alpha, self.shape)

    def __matmul__(self, other):
        if isinstance(other, PlainTensor):
            return apply(self, other)
        if isinstance(other, PairedTensor):
            return einstein_product(self, other)
        return NotImplemented

    def __repr__(self):
        return f"PairedTensor(shape={self.shape})"


def unfold(a: PairedTensor) -> np.ndarray:
    return a.unfold()


def fold(matrix, shape: Shape) -> PairedTensor:
    return PairedTensor.fold(matrix, shape)


def einstein_product(a: PairedTensor, b: PairedTensor) -> PairedTensor:
    """Contract all column modes of ``a`` against the row modes of ``b``."""
    if a.shape.col_dims != b.shape.row_dims:
        raise ShapeMismatch(
            f"Einstein product needs a.col_dims == b.row_dims, got "
            f"{a.shape.col_dims} and {b.shape.row_dims}"
        )
    return PairedTensor.fold(a.unfold() @ b.unfold(), Shape(a.shape.row_dims, b.shape.col_dims))


def apply(a: PairedTensor, x: PlainTensor) -> PlainTensor:
    """``A * X`` for an order-N tensor ``X``."""
    if a.shape.col_dims != x.dims:
        raise ShapeMismatch(f"cannot apply {a.shape} to tensor of dims {x.dims}")
    return PlainTensor(a.unfold() @ x.data, a.shape.row_dims)


def conj_transpose(a: PairedTensor) -> PairedTensor:
    return PairedTensor.fold(a.unfold().conj().T, a.shape.transpose())


def transpose(a: PairedTensor) -> PairedTensor:
    return PairedTensor.fold(a.unfold().T, a.shape.transpose())


def is_hermitian(a: PairedTensor, tol: float = DEFAULT_TOL) -> bool:
    if not a.shape.is_square:
        return False
    m = a.unfold()
    return np.linalg.norm(m - m.conj().T) <= tol * np.linalg.norm(m)


def hermitian_part(a: PairedTensor) -> PairedTensor:
    m = a.unfold()
    return PairedTensor.fold(0.5 * (m + m.conj().T), a.shape)


def _lu(a: PairedTensor):
    if not a.shape.is_square:
        raise ShapeMismatch(f"tensor of shape {a.shape} is not square")
    m = a.unfold()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(m, check_finite=True)
    scale = np.linalg.norm(m)
    pivots = np.abs(np.diag(lu))
    if scale == 0.0 or pivots.min() <= 1e-12 * scale:
        raise SingularTensor(
            f"unfolding is numerically singular (min pivot {pivots.min():.3e}, "
            f"||A||_F = {scale:.3e})"
        )
    return lu, piv


def inverse(a: PairedTensor) -> PairedTensor:
    """Inverse under the Einstein product, via LU of the unfolding."""
    lu, piv = _lu(a)
    inv = sla.lu_solve((lu, piv), np.eye(a.shape.n_rows, dtype=complex))
    return PairedTensor.fold(inv, a.shape)


def solve(a: PairedTensor, b):
    """Solve ``A * X = B`` for a PairedTensor or PlainTensor right-hand side."""
    lu, piv = _lu(a)
    if isinstance(b, PlainTensor):
        if b.dims != a.shape.row_dims:
            raise ShapeMismatch(f"right-hand side dims {b.dims} do not match {a.shape}")
        return PlainTensor(sla.lu_solve((lu, piv), b.data), a.shape.col_dims)
    if b.shape.row_dims != a.shape.row_dims:
        raise ShapeMismatch(f"right-hand side {b.shape} does not match {a.shape}")
    return PairedTensor.fold(sla.lu_solve((lu, piv), b.unfold()), Shape(a.shape.col_dims, b.shape.col_dims))


# block tensors -------------------------------------------------------------

def _mode_axis(n: int, order: int) -> int:
    if not 1 <= n <= order:
        raise ShapeMismatch(f"mode {n} out of range 1..{order}")
    return n - 1


def row_block(blocks: Sequence[PairedTensor], n: int = 1) -> PairedTensor:
    """n-mode row block tensor ``[A B ...]_n`` (concatenation of column mode n)."""
    first = blocks[0]
    ax = _mode_axis(n, first.order)
    for b in blocks[1:]:
        if b.order != first.order:
            raise ShapeMismatch("row block tensors need equal orders")
        ok = all(
            b.shape.row_dims[k] == first.shape.row_dims[k]
            and (k == ax or b.shape.col_dims[k] == first.shape.col_dims[k])
            for k in range(first.order)
        )
        if not ok:
            raise ShapeMismatch(f"block {b.shape} not conformal with {first.shape} in mode {n}")
    arr = np.concatenate([b.array for b in blocks], axis=first.order + ax)
    return PairedTensor(arr)


def col_block(blocks: Sequence, n: int = 1):
    """n-mode column block tensor ``[A; B; ...]_n`` (concatenation of row mode n).

    Also accepts PlainTensor blocks, treated as tensors with unit column modes.
    """
    first = blocks[0]
    if isinstance(first, PlainTensor):
        ax = _mode_axis(n, first.order)
        for b in blocks[1:]:
            if any(b.dims[k] != first.dims[k] for k in range(first.order) if k != ax):
                raise ShapeMismatch(f"blocks {b.dims} and {first.dims} not conformal in mode {n}")
        return PlainTensor(np.concatenate([b.array for b in blocks], axis=ax))
    ax = _mode_axis(n, first.order)
    for b in blocks[1:]:
        ok = b.order == first.order and all(
            b.shape.col_dims[k] == first.shape.col_dims[k]
            and (k == ax or b.shape.row_dims[k] == first.shape.row_dims[k])
            for k in range(first.order)
        )
        if not ok:
            raise ShapeMismatch(f"block {b.shape} not conformal with {first.shape} in mode {n}")
    return PairedTensor(np.concatenate([b.array for b in blocks], axis=ax))


def block2x2(a: PairedTensor, b: PairedTensor, c: PairedTensor, d: PairedTensor, n: int = 1) -> PairedTensor:
    """``[[A, B], [C, D]]_n``: doubles row and column mode n."""
    return col_block([row_block([a, b], n), row_block([c, d], n)], n)


def split2x2(m: PairedTensor, n: int = 1) -> tuple[PairedTensor, PairedTensor, PairedTensor, PairedTensor]:
    """Inverse of ``block2x2`` for even mode-n dimensions."""
    ax = _mode_axis(n, m.order)
    ri, ci = m.shape.row_dims[ax], m.shape.col_dims[ax]
    if ri % 2 or ci % 2:
        raise ShapeMismatch(f"mode {n} dimensions of {m.shape} are not even")
    arr = m.array
    rsl = [slice(0, ri // 2), slice(ri // 2, ri)]
    csl = [slice(0, ci // 2), slice(ci // 2, ci)]
    out = []
    for r in rsl:
        for c in csl:
            idx = [slice(None)] * (2 * m.order)
            idx[ax] = r
            idx[m.order + ax] = c
            out.append(PairedTensor(arr[tuple(idx)]))
    return tuple(out)


@dataclass(frozen=True)
class Blocking:
    """Per-mode partitions; for paired tensors modes are in interleaved order."""

    parts: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        parts = tuple(tuple(int(p) for p in ps) for ps in self.parts)
        if any(not ps or min(ps) < 1 for ps in parts):
            raise ShapeMismatch("every blocking part must be a positive integer")
        object.__setattr__(self, "parts", parts)

    @classmethod
    def uniform(cls, block_dims, counts) -> Blocking:
        return cls(tuple((b,) * k for b, k in zip(block_dims, counts)))

    def validate(self, dims: Sequence[int]):
        if len(dims) != len(self.parts) or any(sum(p) != d for p, d in zip(self.parts, dims)):
            raise ShapeMismatch(f"blocking {self.parts} does not partition dims {tuple(dims)}")

    def window(self, index: Sequence[int]) -> tuple[slice, ...]:
        if len(index) != len(self.parts):
            raise IndexError(f"block index {tuple(index)} has wrong length")
        out = []
        for k, ps in zip(index, self.parts):
            if not 0 <= k < len(ps):
                raise IndexError(f"block index {tuple(index)} out of range for {self.parts}")
            start = sum(ps[:k])
            out.append(slice(start, start + ps[k]))
        return tuple(out)


def extract_block(a, blocking: Blocking, index: Sequence[int]):
    """Subtensor window ``A_[index]`` (0-based block index)."""
    if isinstance(a, PlainTensor):
        blocking.validate(a.dims)
        return PlainTensor(a.array[blocking.window(index)])
    blocking.validate(a.shape.interleaved)
    sub = a.interleaved()[blocking.window(index)]
    return PairedTensor.from_interleaved(sub)


def perfect_shuffle(q: int, r: int) -> np.ndarray:
    """``Pi_{q,r}``: gathers entries with stride ``r`` into consecutive groups."""
    s = q * r
    p = np.zeros((s, s))
    for b in range(r):
        for m in range(q):
            p[b * q + m, b + m * r] = 1.0
    return p


def shuffle_permutation(n: int, dims: Sequence[int]) -> np.ndarray:
    """Permutation ``P`` with ``unfold([[A,B],[C,D]]_n) = P [[A,B],[C,D]] P^T``.

    Built as the transpose of ``Q_N ... Q_{n+1}`` with
    ``Q_k = I_{I_{k+1}...I_N} (x) Pi_{I_k,2} (x) I_{I_1...I_{k-1}}``: each
    ``Q_k^T`` moves the block digit one mode towards mode ``n``.
    """
    dims = _dims(dims)
    order = len(dims)
    _mode_axis(n, order)
    size = 2 * prod(dims)
    q = np.eye(size)
    for k in range(n + 1, order + 1):
        left = prod(dims[k:])
        right = prod(dims[: k - 1])
        qk = np.kron(np.eye(left), np.kron(perfect_shuffle(dims[k - 1], 2), np.eye(right)))
        q = qk @ q
    return q.T


# norms ---------------------------------------------------------------------

def frobenius_norm(x) -> float:
    return float(np.linalg.norm(x.data))


def inner_product(x, y) -> complex:
    _check_same_dims(x, y)
    return complex(np.vdot(x.data, y.data))


def spectral_norm(a: PairedTensor) -> float:
    return float(np.linalg.norm(a.unfold(), 2))


def is_positive_semidefinite(a: PairedTensor, tol: float = DEFAULT_TOL) -> tuple[bool, float]:
    """Return ``(is_psd, smallest_eigenvalue)`` for a Hermitian tensor."""
    if not is_hermitian(a, tol):
        raise NotHermitian(f"tensor of shape {a.shape} is not Hermitian within {tol:g}")
    lam = float(np.linalg.eigvalsh(hermitian_part(a).unfold())[0])
    return lam >= -tol, lam
