"""Complex Schur kernels in NumPy.

Same algorithm and rotation conventions as the compiled ``_core`` module;
selected when the extension is unavailable or ``RTK_PURE_PYTHON`` is set.
Arrays are modified in place.
"""
import numpy as np

_EPS = np.finfo(float).eps


def hessenberg(h, z):
    """Reduce ``h`` to upper Hessenberg form, accumulating into ``z``."""
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        x0 = x[0]
        phase = x0 / abs(x0) if x0 != 0 else 1.0
        v = x
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        # H <- P H P with P = I - 2 v v^H
        h[k + 1:, :] -= 2.0 * np.outer(v, v.conj() @ h[k + 1:, :])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v.conj())
        z[:, k + 1:] -= 2.0 * np.outer(z[:, k + 1:] @ v, v.conj())
        h[k + 2:, k] = 0.0


def _givens(x, y):
    ax = abs(x)
    if y == 0:
        return 1.0, 0.0j
    r = np.hypot(ax, abs(y))
    if ax == 0.0:
        return 0.0, np.conj(y) / abs(y)
    return ax / r, (x / ax) * np.conj(y) / r


def _wilkinson(a, b, c, d):
    half = 0.5 * (a - d)
    disc = np.sqrt(half * half + b * c)
    m1 = 0.5 * (a + d) + disc
    m2 = 0.5 * (a + d) - disc
    return m1 if abs(m1 - d) <= abs(m2 - d) else m2


def schur_qr(h, z, max_its=60):
    """Shifted QR iteration on a Hessenberg matrix.

    Returns the total number of sweeps, or -1 if some eigenvalue failed to
    deflate within ``max_its`` sweeps.
    """
    n = h.shape[0]
    hnorm = np.abs(h).sum()
    hi = n - 1
    its = 0
    total = 0
    cs = np.empty(n)
    ss = np.empty(n, dtype=complex)
    while hi > 0:
        lo = hi
        while lo > 0:
            s = abs(h[lo - 1, lo - 1]) + abs(h[lo, lo])
            if s == 0.0:
                s = hnorm
            if abs(h[lo, lo - 1]) <= _EPS * s:
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            hi -= 1
            its = 0
            continue
        its += 1
        total += 1
        if its > max_its:
            return -1
        if its % 10 == 0:
            mu = h[hi, hi] + 0.75 * abs(h[hi, hi - 1])
        else:
            mu = _wilkinson(h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi])
        for k in range(lo, hi + 1):
            h[k, k] -= mu
        for k in range(lo, hi):
            c, s = _givens(h[k, k], h[k + 1, k])
            cs[k] = c
            ss[k] = s
            rk = h[k, k:].copy()
            rk1 = h[k + 1, k:]
            h[k, k:] = c * rk + s * rk1
            h[k + 1, k:] = -np.conj(s) * rk + c * rk1
        for k in range(lo, hi):
            c = cs[k]
            s = ss[k]
            top = k + 2
            ck = h[:top, k].copy()
            h[:top, k] = c * ck + np.conj(s) * h[:top, k + 1]
            h[:top, k + 1] = -s * ck + c * h[:top, k + 1]
            zk = z[:, k].copy()
            z[:, k] = c * zk + np.conj(s) * z[:, k + 1]
            z[:, k + 1] = -s * zk + c * z[:, k + 1]
        for k in range(lo, hi + 1):
            h[k, k] += mu
    for k in range(1, n):
        h[k, :k] = 0.0
    return total


def swap_adjacent(t, z, k):
    """Exchange diagonal entries k and k+1 of upper triangular ``t``."""
    a = t[k, k]
    c = t[k + 1, k + 1]
    b = t[k, k + 1]
    y = c - a
    nrm = np.hypot(abs(b), abs(y))
    if nrm == 0.0 or a == c:
        return
    x = b / nrm
    y = y / nrm
    rk = t[k, k:].copy()
    rk1 = t[k + 1, k:]
    t[k, k:] = np.conj(x) * rk + np.conj(y) * rk1
    t[k + 1, k:] = -y * rk + x * rk1
    top = k + 2
    ck = t[:top, k].copy()
    t[:top, k] = x * ck + y * t[:top, k + 1]
    t[:top, k + 1] = -np.conj(y) * ck + np.conj(x) * t[:top, k + 1]
    zk = z[:, k].copy()
    z[:, k] = x * zk + y * z[:, k + 1]
    z[:, k + 1] = -np.conj(y) * zk + np.conj(x) * z[:, k + 1]
    t[k + 1, k] = 0.0


def reorder(t, z, select):
    """Move entries flagged in ``select`` to the leading diagonal positions."""
    sel = [bool(v) for v in select]
    n = t.shape[0]
    dest = 0
    for i in range(n):
        if sel[i]:
            for k in range(i - 1, dest - 1, -1):
                swap_adjacent(t, z, k)
                sel[k], sel[k + 1] = sel[k + 1], sel[k]
            dest += 1
    return dest
