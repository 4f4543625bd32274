# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled complex Schur kernels.

Mirror of ``_pure`` with identical rotation conventions; operates in place on
C- or Fortran-ordered complex128 arrays through typed memoryviews.
"""
from libc.math cimport sqrt, fabs, hypot, copysign

cdef double EPS = 2.220446049250313e-16


cdef inline double cabs_(double complex z) nogil:
    return hypot(z.real, z.imag)


cdef inline double complex conj_(double complex z) nogil:
    return z.real - 1j * z.imag


cdef inline double complex csqrt_(double complex z) nogil:
    cdef double r = hypot(z.real, z.imag)
    cdef double t
    if r == 0.0:
        return 0.0
    t = sqrt(0.5 * (r + fabs(z.real)))
    if z.real >= 0.0:
        return t + 1j * (z.imag / (2.0 * t))
    return fabs(z.imag) / (2.0 * t) + 1j * copysign(t, z.imag)


def hessenberg(double complex[:, :] h, double complex[:, :] z):
    cdef Py_ssize_t n = h.shape[0]
    cdef Py_ssize_t k, i, j, m
    cdef double alpha, vn
    cdef double complex phase, acc
    cdef double complex[:] v
    import numpy as np
    v_arr = np.empty(n, dtype=np.complex128)
    v = v_arr
    for k in range(n - 2):
        m = n - k - 1
        alpha = 0.0
        for i in range(m):
            v[i] = h[k + 1 + i, k]
            alpha += v[i].real * v[i].real + v[i].imag * v[i].imag
        alpha = sqrt(alpha)
        if alpha == 0.0:
            continue
        if cabs_(v[0]) != 0.0:
            phase = v[0] / cabs_(v[0])
        else:
            phase = 1.0
        v[0] = v[0] + phase * alpha
        vn = 0.0
        for i in range(m):
            vn += v[i].real * v[i].real + v[i].imag * v[i].imag
        vn = sqrt(vn)
        for i in range(m):
            v[i] = v[i] / vn
        for j in range(n):
            acc = 0.0
            for i in range(m):
                acc = acc + conj_(v[i]) * h[k + 1 + i, j]
            for i in range(m):
                h[k + 1 + i, j] = h[k + 1 + i, j] - 2.0 * v[i] * acc
        for i in range(n):
            acc = 0.0
            for j in range(m):
                acc = acc + h[i, k + 1 + j] * v[j]
            for j in range(m):
                h[i, k + 1 + j] = h[i, k + 1 + j] - 2.0 * acc * conj_(v[j])
        for i in range(n):
            acc = 0.0
            for j in range(m):
                acc = acc + z[i, k + 1 + j] * v[j]
            for j in range(m):
                z[i, k + 1 + j] = z[i, k + 1 + j] - 2.0 * acc * conj_(v[j])
        for i in range(k + 2, n):
            h[i, k] = 0.0


cdef inline void givens_(double complex x, double complex y, double *c, double complex *s) nogil:
    cdef double ax = cabs_(x)
    cdef double ay, r
    if y == 0.0:
        c[0] = 1.0
        s[0] = 0.0
        return
    ay = cabs_(y)
    r = hypot(ax, ay)
    if ax == 0.0:
        c[0] = 0.0
        s[0] = conj_(y) / ay
        return
    c[0] = ax / r
    s[0] = (x / ax) * conj_(y) / r


def schur_qr(double complex[:, :] h, double complex[:, :] z, int max_its=60):
    cdef Py_ssize_t n = h.shape[0]
    cdef Py_ssize_t hi = n - 1
    cdef Py_ssize_t lo, k, j, top
    cdef int its = 0
    cdef int total = 0
    cdef double hnorm = 0.0
    cdef double s_, c
    cdef double complex s, mu, a, b, cc, d, half, disc, m1, m2, x0, x1
    import numpy as np
    cs_arr = np.empty(max(n, 1), dtype=np.float64)
    ss_arr = np.empty(max(n, 1), dtype=np.complex128)
    cdef double[:] cs = cs_arr
    cdef double complex[:] ss = ss_arr
    for k in range(n):
        for j in range(n):
            hnorm += cabs_(h[k, j])
    with nogil:
        while hi > 0:
            lo = hi
            while lo > 0:
                s_ = cabs_(h[lo - 1, lo - 1]) + cabs_(h[lo, lo])
                if s_ == 0.0:
                    s_ = hnorm
                if cabs_(h[lo, lo - 1]) <= EPS * s_:
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
                total = -1
                break
            if its % 10 == 0:
                mu = h[hi, hi] + 0.75 * cabs_(h[hi, hi - 1])
            else:
                a = h[hi - 1, hi - 1]
                b = h[hi - 1, hi]
                cc = h[hi, hi - 1]
                d = h[hi, hi]
                half = 0.5 * (a - d)
                disc = csqrt_(half * half + b * cc)
                m1 = 0.5 * (a + d) + disc
                m2 = 0.5 * (a + d) - disc
                if cabs_(m1 - d) <= cabs_(m2 - d):
                    mu = m1
                else:
                    mu = m2
            for k in range(lo, hi + 1):
                h[k, k] = h[k, k] - mu
            for k in range(lo, hi):
                givens_(h[k, k], h[k + 1, k], &c, &s)
                cs[k] = c
                ss[k] = s
                for j in range(k, n):
                    x0 = h[k, j]
                    x1 = h[k + 1, j]
                    h[k, j] = c * x0 + s * x1
                    h[k + 1, j] = -conj_(s) * x0 + c * x1
            for k in range(lo, hi):
                c = cs[k]
                s = ss[k]
                top = k + 2
                for j in range(top):
                    x0 = h[j, k]
                    x1 = h[j, k + 1]
                    h[j, k] = c * x0 + conj_(s) * x1
                    h[j, k + 1] = -s * x0 + c * x1
                for j in range(n):
                    x0 = z[j, k]
                    x1 = z[j, k + 1]
                    z[j, k] = c * x0 + conj_(s) * x1
                    z[j, k + 1] = -s * x0 + c * x1
            for k in range(lo, hi + 1):
                h[k, k] = h[k, k] + mu
    if total >= 0:
        for k in range(1, n):
            for j in range(k):
                h[k, j] = 0.0
    return total


cdef void swap_(double complex[:, :] t, double complex[:, :] z, Py_ssize_t k) nogil:
    cdef Py_ssize_t n = t.shape[0]
    cdef Py_ssize_t j
    cdef double complex a = t[k, k]
    cdef double complex c = t[k + 1, k + 1]
    cdef double complex b = t[k, k + 1]
    cdef double complex y = c - a
    cdef double complex x, x0, x1
    cdef double nrm = hypot(cabs_(b), cabs_(y))
    if nrm == 0.0 or a == c:
        return
    x = b / nrm
    y = y / nrm
    for j in range(k, n):
        x0 = t[k, j]
        x1 = t[k + 1, j]
        t[k, j] = conj_(x) * x0 + conj_(y) * x1
        t[k + 1, j] = -y * x0 + x * x1
    for j in range(k + 2):
        x0 = t[j, k]
        x1 = t[j, k + 1]
        t[j, k] = x * x0 + y * x1
        t[j, k + 1] = -conj_(y) * x0 + conj_(x) * x1
    for j in range(n):
        x0 = z[j, k]
        x1 = z[j, k + 1]
        z[j, k] = x * x0 + y * x1
        z[j, k + 1] = -conj_(y) * x0 + conj_(x) * x1
    t[k + 1, k] = 0.0


def swap_adjacent(double complex[:, :] t, double complex[:, :] z, Py_ssize_t k):
    swap_(t, z, k)


def reorder(double complex[:, :] t, double complex[:, :] z, select):
    cdef Py_ssize_t n = t.shape[0]
    cdef Py_ssize_t i, k
    cdef Py_ssize_t dest = 0
    sel = [bool(v) for v in select]
    for i in range(n):
        if sel[i]:
            k = i - 1
            while k >= dest:
                swap_(t, z, k)
                sel[k], sel[k + 1] = sel[k + 1], sel[k]
                k -= 1
            dest += 1
    return dest
