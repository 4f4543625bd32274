"""JSON documents for tensors and problems.

Complex numbers are two-element arrays ``[re, im]``. Dense tensor data is
listed in the canonical flat order, which is the column-major layout of the
unfolding: for a 2x2x2x2 tensor (dims ``I = J = (2, 2)``) the entry
``A[i1, j1, i2, j2]`` (1-based) sits at position
``(ivec(j, J) - 1) * 4 + ivec(i, I)``, so the order starts
``A[1,1,1,1], A[2,1,1,1], A[1,1,2,1], A[2,1,2,1], A[1,2,1,1], ...``.

GCPD factors are lists of rows (row-major), each row a list of ``[re, im]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import json
import math
from pathlib import Path
from typing import IO, Any

import numpy as np

from .errors import ParseError, RTKError, ValidationError
from .structured import GcpdTensor
from .tensor import PairedTensor, Shape

KINDS = {
    "arte": (("A",), (("G", "K"), ("B", "C"))),
    "lyapunov": (("A", "Q"), ()),
    "sylvester": (("A", "B", "K"), ()),
    "system": (("A", "B", "C"), ()),
}
OPTIONAL = {"arte": ("E0", "G", "K", "B", "C"), "system": ("D",), "lyapunov": (), "sylvester": ()}
OPTION_TYPES = {
    "method": str,
    "inner": str,
    "eps": float,
    "inner_tol": float,
    "max_iter": int,
    "seed": int,
    "gamma": float,
    "rel_tol": float,
}


def _reject_constant(name):
    raise ValueError(f"non-finite number {name} is not allowed")


def _complex_list(values, where: str) -> np.ndarray:
    if not isinstance(values, list):
        raise ValidationError(f"{where}: expected a list of [re, im] pairs", field=where)
    out = np.empty(len(values), dtype=complex)
    for k, v in enumerate(values):
        if (
            not isinstance(v, list)
            or len(v) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)
        ):
            raise ValidationError(f"{where}[{k}]: expected [re, im] pair of numbers, got {v!r}", field=where)
        out[k] = complex(float(v[0]), float(v[1]))
    return out


def _pairs(values) -> list[list[float]]:
    arr = np.asarray(values, dtype=complex).ravel()
    if not np.all(np.isfinite(arr)):
        raise ValidationError("cannot serialize non-finite values")
    return [[float(z.real), float(z.imag)] for z in arr]


def _dims_field(obj: dict, key: str, where: str) -> list[int]:
    dims = obj.get(key)
    if not isinstance(dims, list) or not dims or not all(isinstance(d, int) and not isinstance(d, bool) and d >= 1 for d in dims):
        raise ValidationError(f"{where}.{key}: expected a non-empty list of positive integers", field=f"{where}.{key}")
    return dims


def tensor_from_obj(obj: Any, where: str = "tensor"):
    """Decode a tensor document into a PairedTensor or GcpdTensor."""
    if not isinstance(obj, dict):
        raise ValidationError(f"{where}: expected an object", field=where)
    fmt = obj.get("format")
    rows = _dims_field(obj, "row_dims", where)
    cols = _dims_field(obj, "col_dims", where)
    if len(rows) != len(cols):
        raise ValidationError(f"{where}: row_dims and col_dims differ in length", field=f"{where}.col_dims")
    order = obj.get("order", len(rows))
    if order != len(rows):
        raise ValidationError(f"{where}.order = {order} but row_dims has {len(rows)} entries", field=f"{where}.order")
    shape = Shape(rows, cols)
    if fmt == "dense":
        data = _complex_list(obj.get("data"), f"{where}.data")
        need = shape.n_rows * shape.n_cols
        if data.size != need:
            raise ValidationError(
                f"{where}.data has {data.size} entries, expected {need} for shape {shape}", field=f"{where}.data"
            )
        return PairedTensor(data, shape)
    if fmt == "gcpd":
        rank = obj.get("rank")
        terms = obj.get("factors")
        if not isinstance(rank, int) or rank < 1:
            raise ValidationError(f"{where}.rank: expected a positive integer", field=f"{where}.rank")
        if not isinstance(terms, list) or len(terms) != rank:
            raise ValidationError(f"{where}.factors: expected {rank} terms", field=f"{where}.factors")
        decoded = []
        for r, term in enumerate(terms):
            if not isinstance(term, list) or len(term) != order:
                raise ValidationError(f"{where}.factors[{r}]: expected {order} matrices", field=f"{where}.factors")
            mats = []
            for n, mat in enumerate(term):
                loc = f"{where}.factors[{r}][{n}]"
                if not isinstance(mat, list) or len(mat) != rows[n]:
                    raise ValidationError(f"{loc}: expected {rows[n]} rows", field=loc)
                m = np.stack([_complex_list(row, loc) for row in mat]) if mat else np.zeros((0, cols[n]))
                if m.shape != (rows[n], cols[n]):
                    raise ValidationError(f"{loc}: expected a {rows[n]}x{cols[n]} matrix, got {m.shape}", field=loc)
                mats.append(m)
            decoded.append(mats)
        return GcpdTensor.from_terms(decoded)
    raise ValidationError(f"{where}.format must be 'dense' or 'gcpd', got {fmt!r}", field=f"{where}.format")


def tensor_to_obj(t) -> dict:
    if isinstance(t, GcpdTensor):
        return {
            "format": "gcpd",
            "order": t.order,
            "row_dims": list(t.shape.row_dims),
            "col_dims": list(t.shape.col_dims),
            "rank": t.terms,
            "factors": [[[_pairs(row) for row in mat] for mat in t.term(r)] for r in range(t.terms)],
        }
    return {
        "format": "dense",
        "order": t.order,
        "row_dims": list(t.shape.row_dims),
        "col_dims": list(t.shape.col_dims),
        "data": _pairs(t.data),
    }


def dense(t) -> PairedTensor:
    return t.densify() if isinstance(t, GcpdTensor) else t


@dataclass
class ProblemDocument:
    kind: str
    tensors: dict[str, Any]
    options: dict[str, Any] = field(default_factory=dict)

    def get(self, name: str) -> PairedTensor | None:
        t = self.tensors.get(name)
        return None if t is None else dense(t)

    def to_obj(self) -> dict:
        return {
            "kind": self.kind,
            "options": dict(self.options),
            "tensors": {k: tensor_to_obj(v) for k, v in self.tensors.items()},
        }

    # typed views ----------------------------------------------------------
    def arte_problem(self):
        from .equations import ArteProblem

        self._expect("arte")
        try:
            if "G" in self.tensors:
                return ArteProblem(self.get("A"), self.get("G"), self.get("K"))
            return ArteProblem.from_factors(self.get("A"), self.get("B"), self.get("C"))
        except RTKError as exc:
            raise ValidationError(f"arte coefficients are inconsistent: {exc}", field="tensors") from None

    def system(self):
        from .control import MltiSystem

        if self.kind not in ("system", "arte") or not {"A", "B", "C"} <= set(self.tensors):
            raise ValidationError(f"a system needs tensors A, B, C (document kind {self.kind!r})", field="tensors")
        try:
            return MltiSystem(self.get("A"), self.get("B"), self.get("C"), self.get("D"))
        except RTKError as exc:
            raise ValidationError(f"system tensors are not conformal: {exc}", field="tensors") from None

    def _expect(self, kind: str):
        if self.kind != kind:
            raise ValidationError(f"expected a {kind!r} document, got {self.kind!r}", field="kind")


def _validate_problem(obj: Any) -> ProblemDocument:
    if not isinstance(obj, dict):
        raise ValidationError("top level must be an object", field="")
    kind = obj.get("kind")
    if kind not in KINDS:
        raise ValidationError(f"kind must be one of {sorted(KINDS)}, got {kind!r}", field="kind")
    raw = obj.get("tensors")
    if not isinstance(raw, dict):
        raise ValidationError("tensors: expected an object of named tensors", field="tensors")
    required, alternatives = KINDS[kind]
    allowed = set(required) | set(OPTIONAL[kind])
    for alt in alternatives:
        allowed |= set(alt)
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ValidationError(f"tensors: unexpected field(s) {unknown} for kind {kind!r}", field=f"tensors.{unknown[0]}")
    missing = [n for n in required if n not in raw]
    if missing:
        raise ValidationError(f"tensors.{missing[0]} is required for kind {kind!r}", field=f"tensors.{missing[0]}")
    if alternatives and not any(all(n in raw for n in alt) for alt in alternatives):
        names = " or ".join("+".join(a) for a in alternatives)
        raise ValidationError(f"kind {kind!r} needs tensors {names}", field="tensors")
    tensors = {name: tensor_from_obj(val, f"tensors.{name}") for name, val in raw.items()}
    opts = obj.get("options", {})
    if not isinstance(opts, dict):
        raise ValidationError("options: expected an object", field="options")
    for key, val in opts.items():
        typ = OPTION_TYPES.get(key)
        if typ is None:
            raise ValidationError(f"options.{key}: unknown option", field=f"options.{key}")
        ok = isinstance(val, str) if typ is str else (
            isinstance(val, int) and not isinstance(val, bool) if typ is int
            else isinstance(val, (int, float)) and not isinstance(val, bool) and math.isfinite(val)
        )
        if not ok:
            raise ValidationError(f"options.{key}: expected {typ.__name__}, got {val!r}", field=f"options.{key}")
    extra = sorted(set(obj) - {"kind", "tensors", "options"})
    if extra:
        raise ValidationError(f"unexpected top-level field(s) {extra}", field=extra[0])
    doc = ProblemDocument(kind, tensors, dict(opts))
    _check_conformal(doc)
    return doc


def _check_conformal(doc: ProblemDocument):
    shapes = {k: (v.shape if not isinstance(v, GcpdTensor) else v.shape) for k, v in doc.tensors.items()}
    a = shapes["A"]
    if not a.is_square:
        raise ValidationError(f"tensors.A must be square, got {a}", field="tensors.A")
    same = {"arte": ("G", "K", "E0"), "lyapunov": ("Q",), "system": (), "sylvester": ()}[doc.kind]
    for name in same:
        if name in shapes and shapes[name] != a:
            raise ValidationError(f"tensors.{name} has shape {shapes[name]}, expected {a}", field=f"tensors.{name}")
    if doc.kind == "sylvester":
        b, k = shapes["B"], shapes["K"]
        if not b.is_square:
            raise ValidationError(f"tensors.B must be square, got {b}", field="tensors.B")
        if k != Shape(a.row_dims, b.col_dims):
            raise ValidationError(f"tensors.K has shape {k}, expected rows {a.row_dims} cols {b.col_dims}",
                                  field="tensors.K")
    if doc.kind in ("arte", "system") and "B" in shapes:
        if shapes["B"].row_dims != a.row_dims:
            raise ValidationError(f"tensors.B rows {shapes['B'].row_dims} do not match A", field="tensors.B")
        if "C" in shapes and shapes["C"].col_dims != a.col_dims:
            raise ValidationError(f"tensors.C cols {shapes['C'].col_dims} do not match A", field="tensors.C")


def loads(text: str | bytes) -> ProblemDocument:
    """Parse a problem document from JSON text."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not valid UTF-8: {exc}") from None
    try:
        obj = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}", line=exc.lineno) from None
    except ValueError as exc:
        raise ParseError(str(exc)) from None
    return _validate_problem(obj)


def parse(source: str | Path | IO) -> ProblemDocument:
    """Parse a problem document from a path or a readable stream."""
    if hasattr(source, "read"):
        return loads(source.read())
    try:
        data = Path(source).read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read {source}: {exc.strerror}") from None
    return loads(data)


def dumps_obj(obj: Any) -> bytes:
    """Canonical JSON encoding: sorted keys, two-space indent, trailing newline."""
    return (json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n").encode("utf-8")


def serialize(doc: ProblemDocument) -> bytes:
    return dumps_obj(doc.to_obj())


def complex_pairs(values) -> list[list[float]]:
    return _pairs(values)
