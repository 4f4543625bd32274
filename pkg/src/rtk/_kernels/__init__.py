"""Kernel backend selection.

The compiled ``_core`` extension is used when it imports; otherwise, or when
the ``RTK_PURE_PYTHON`` environment variable is set to a non-empty value other
than ``0``, the NumPy implementation in ``_pure`` is used.
"""
import os

from . import _pure

if os.environ.get("RTK_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pure
else:
    try:
        from . import _core as _impl
    except ImportError:  # extension not built
        _impl = _pure

BACKEND = "compiled" if _impl is not _pure else "python"

hessenberg = _impl.hessenberg
schur_qr = _impl.schur_qr
swap_adjacent = _impl.swap_adjacent
reorder = _impl.reorder

__all__ = ["BACKEND", "hessenberg", "schur_qr", "swap_adjacent", "reorder"]
