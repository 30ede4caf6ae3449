# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: local contractions, environment extraction, Jacobi SVD
and the full two-sided sweep. Mirrors ``_pykernels`` one-to-one."""

import numpy as np

from libc.math cimport sqrt, fabs, atan2, cos, sin, hypot, copysign
from libc.stdlib cimport malloc, free

from unifactor._pykernels import SVDConvergenceError, gate_offsets  # noqa: F401

ctypedef double complex cplx

cdef double EPS = 2.220446049250313e-16

KIND_FIXED = 0
KIND_UNITARY = 1
KIND_RZ = 2


cdef inline double cabs2(cplx z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline cplx cconj(cplx z) noexcept nogil:
    return z.real - 1j * z.imag


cdef void _apply_left(cplx[:, ::1] t, cplx[:, ::1] u, bint inverse,
                      Py_ssize_t[::1] lo, Py_ssize_t[::1] ro, cplx* buf) noexcept nogil:
    cdef Py_ssize_t d = t.shape[0], k = lo.shape[0], nr = ro.shape[0]
    cdef Py_ssize_t r, c, a, b, base
    cdef cplx acc
    for r in range(nr):
        base = ro[r]
        for c in range(d):
            for a in range(k):
                buf[a] = t[base + lo[a], c]
            for a in range(k):
                acc = 0
                if inverse:
                    for b in range(k):
                        acc = acc + cconj(u[b, a]) * buf[b]
                else:
                    for b in range(k):
                        acc = acc + u[a, b] * buf[b]
                t[base + lo[a], c] = acc


cdef void _apply_right(cplx[:, ::1] t, cplx[:, ::1] u, bint inverse,
                       Py_ssize_t[::1] lo, Py_ssize_t[::1] ro, cplx* buf) noexcept nogil:
    cdef Py_ssize_t d = t.shape[0], k = lo.shape[0], nr = ro.shape[0]
    cdef Py_ssize_t r, row, a, b, base
    cdef cplx acc
    for row in range(d):
        for r in range(nr):
            base = ro[r]
            for a in range(k):
                buf[a] = t[row, base + lo[a]]
            for b in range(k):
                acc = 0
                if inverse:
                    for a in range(k):
                        acc = acc + buf[a] * cconj(u[b, a])
                else:
                    for a in range(k):
                        acc = acc + buf[a] * u[a, b]
                t[row, base + lo[b]] = acc


cdef void _env(cplx[:, ::1] t, Py_ssize_t[::1] lo, Py_ssize_t[::1] ro, cplx[:, ::1] e) noexcept nogil:
    cdef Py_ssize_t k = lo.shape[0], nr = ro.shape[0]
    cdef Py_ssize_t r, a, b, base
    cdef cplx acc
    for a in range(k):
        for b in range(k):
            acc = 0
            for r in range(nr):
                base = ro[r]
                acc = acc + t[base + lo[a], base + lo[b]]
            e[a, b] = acc


cdef int _jacobi(cplx[:, ::1] a, cplx[:, ::1] v, int max_sweeps) noexcept nogil:
    """Orthogonalize columns of ``a`` in place, accumulating rotations in ``v``.
    Returns 0 on convergence, -1 otherwise."""
    cdef Py_ssize_t dim = a.shape[0], p, q, i
    cdef int sweep
    cdef bint rotated
    cdef double alpha, beta, g, zeta, tt, c, s
    cdef cplx gamma, ph, x, y
    cdef double tol = 4.0 * dim * EPS
    for sweep in range(max_sweeps):
        rotated = False
        for p in range(dim - 1):
            for q in range(p + 1, dim):
                alpha = 0.0
                beta = 0.0
                gamma = 0
                for i in range(dim):
                    alpha += cabs2(a[i, p])
                    beta += cabs2(a[i, q])
                    gamma = gamma + cconj(a[i, p]) * a[i, q]
                g = hypot(gamma.real, gamma.imag)
                if g == 0.0 or g <= tol * sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * g)
                tt = copysign(1.0, zeta) / (fabs(zeta) + sqrt(1.0 + zeta * zeta))
                c = 1.0 / sqrt(1.0 + tt * tt)
                s = c * tt
                ph = gamma / g
                for i in range(dim):
                    x = a[i, p]
                    y = a[i, q]
                    a[i, p] = c * x - s * cconj(ph) * y
                    a[i, q] = s * ph * x + c * y
                    x = v[i, p]
                    y = v[i, q]
                    v[i, p] = c * x - s * cconj(ph) * y
                    v[i, q] = s * ph * x + c * y
        if not rotated:
            return 0
    return -1


cdef int _svd(cplx[:, ::1] m, cplx[:, ::1] xo, double[::1] so, cplx[:, ::1] yo,
              cplx[:, ::1] a, cplx[:, ::1] v, Py_ssize_t* order, cplx* col) noexcept nogil:
    """Full SVD into preallocated outputs. ``a``, ``v``, ``order``, ``col`` are scratch."""
    cdef Py_ssize_t dim = m.shape[0], i, j, l, best, tmp
    cdef double nrm, tiny
    cdef cplx dot
    for i in range(dim):
        for j in range(dim):
            a[i, j] = m[i, j]
            v[i, j] = 1.0 if i == j else 0.0
    if _jacobi(a, v, 60) != 0:
        return -1
    for j in range(dim):
        nrm = 0.0
        for i in range(dim):
            nrm += cabs2(a[i, j])
        so[j] = sqrt(nrm)
        order[j] = j
    # selection sort, descending, stable
    for j in range(dim):
        best = j
        for l in range(j + 1, dim):
            if so[order[l]] > so[order[best]]:
                best = l
        tmp = order[best]
        for l in range(best, j, -1):
            order[l] = order[l - 1]
        order[j] = tmp
    for j in range(dim):
        col[j] = so[order[j]]
    tiny = dim * EPS * col[0].real
    for j in range(dim):
        so[j] = col[j].real
        for i in range(dim):
            yo[i, j] = v[i, order[j]]
    for j in range(dim):
        if so[j] > tiny and so[j] > 0.0:
            for i in range(dim):
                col[i] = a[i, order[j]] / so[j]
            if _orth_into(xo, j, col) >= 0.5:
                continue
        for l in range(dim):
            for i in range(dim):
                col[i] = 1.0 if i == l else 0.0
            if _orth_into(xo, j, col) > 0.5:
                break
    return 0


cdef double _orth_into(cplx[:, ::1] x, Py_ssize_t j, cplx* col) noexcept nogil:
    """Project ``col`` off columns 0..j-1 of ``x``, normalize into column j.
    Returns the norm after projection."""
    cdef Py_ssize_t dim = x.shape[0], i, l
    cdef cplx dot
    cdef double nrm = 0.0
    for l in range(j):
        dot = 0
        for i in range(dim):
            dot = dot + cconj(x[i, l]) * col[i]
        for i in range(dim):
            col[i] = col[i] - dot * x[i, l]
    for i in range(dim):
        nrm += cabs2(col[i])
    nrm = sqrt(nrm)
    if nrm > 0.0:
        for i in range(dim):
            x[i, j] = col[i] / nrm
    return nrm


cdef class _Scratch:
    cdef cplx[:, ::1] a, v, xo, yo, mix
    cdef double[::1] so
    cdef Py_ssize_t* order
    cdef cplx* col

    def __cinit__(self, Py_ssize_t dim):
        self.a = np.empty((dim, dim), dtype=complex)
        self.v = np.empty((dim, dim), dtype=complex)
        self.xo = np.empty((dim, dim), dtype=complex)
        self.yo = np.empty((dim, dim), dtype=complex)
        self.mix = np.empty((dim, dim), dtype=complex)
        self.so = np.empty(dim, dtype=float)
        self.order = <Py_ssize_t*> malloc(dim * sizeof(Py_ssize_t))
        self.col = <cplx*> malloc(dim * sizeof(cplx))
        if self.order == NULL or self.col == NULL:
            raise MemoryError()

    def __dealloc__(self):
        free(self.order)
        free(self.col)


def jacobi_svd(m, max_sweeps=60):
    """One-sided Jacobi SVD; returns ``(x, s, y)`` with ``m = x diag(s) y^dagger``."""
    mm = np.ascontiguousarray(m, dtype=complex)
    if mm.ndim != 2 or mm.shape[0] != mm.shape[1]:
        raise ValueError(f"square matrix required, got shape {mm.shape}")
    cdef Py_ssize_t dim = mm.shape[0]
    cdef _Scratch sc = _Scratch(dim)
    x = np.zeros((dim, dim), dtype=complex)
    s = np.empty(dim, dtype=float)
    y = np.empty((dim, dim), dtype=complex)
    cdef int rc = _svd(mm, x, s, y, sc.a, sc.v, sc.order, sc.col)
    if rc != 0:
        raise SVDConvergenceError("Jacobi SVD did not converge")
    return x, s, y


cdef int _polar_update(cplx[:, ::1] env, cplx[:, ::1] u, double beta, _Scratch sc) noexcept nogil:
    cdef Py_ssize_t dim = env.shape[0], i, j, l
    cdef cplx acc
    for i in range(dim):
        for j in range(dim):
            sc.mix[i, j] = (1.0 - beta) * env[i, j] + beta * cconj(u[j, i])
    for i in range(dim):
        for j in range(dim):
            sc.xo[i, j] = 0
    if _svd(sc.mix, sc.xo, sc.so, sc.yo, sc.a, sc.v, sc.order, sc.col) != 0:
        return -1
    for i in range(dim):
        for j in range(dim):
            acc = 0
            for l in range(dim):
                acc = acc + sc.yo[i, l] * cconj(sc.xo[j, l])
            u[i, j] = acc
    return 0


cdef void _rz_update(cplx[:, ::1] env, cplx[:, ::1] u, double beta) noexcept nogil:
    cdef cplx m11 = (1.0 - beta) * env[1, 1] + beta * cconj(u[1, 1])
    cdef double theta = atan2(-m11.imag, m11.real)
    u[0, 0] = 1.0
    u[0, 1] = 0
    u[1, 0] = 0
    u[1, 1] = cos(theta) + 1j * sin(theta)


def polar_update(env, u_old, double beta):
    e = np.ascontiguousarray(env, dtype=complex)
    u = np.array(u_old, dtype=complex, order="C", copy=True)
    cdef _Scratch sc = _Scratch(e.shape[0])
    if _polar_update(e, u, beta, sc) != 0:
        raise SVDConvergenceError("Jacobi SVD did not converge")
    return u


def rz_update(env, u_old, double beta):
    e = np.ascontiguousarray(env, dtype=complex)
    u = np.array(u_old, dtype=complex, order="C", copy=True)
    _rz_update(e, u, beta)
    return u


def apply_left(cplx[:, ::1] t, u, Py_ssize_t[::1] loc_off, Py_ssize_t[::1] rest_off, bint inverse=False):
    cdef cplx[:, ::1] uu = np.ascontiguousarray(u, dtype=complex)
    cdef cplx* buf = <cplx*> malloc(loc_off.shape[0] * sizeof(cplx))
    try:
        _apply_left(t, uu, inverse, loc_off, rest_off, buf)
    finally:
        free(buf)


def apply_right(cplx[:, ::1] t, u, Py_ssize_t[::1] loc_off, Py_ssize_t[::1] rest_off, bint inverse=False):
    cdef cplx[:, ::1] uu = np.ascontiguousarray(u, dtype=complex)
    cdef cplx* buf = <cplx*> malloc(loc_off.shape[0] * sizeof(cplx))
    try:
        _apply_right(t, uu, inverse, loc_off, rest_off, buf)
    finally:
        free(buf)


def env_matrix(cplx[:, ::1] t, Py_ssize_t[::1] loc_off, Py_ssize_t[::1] rest_off):
    k = loc_off.shape[0]
    e = np.empty((k, k), dtype=complex)
    _env(t, loc_off, rest_off, e)
    return e


def sweep(cplx[:, ::1] t, list mats, kinds, list loc_offs, list rest_offs, double beta):
    """One backward plus one forward pass, in place on ``t`` and ``mats``."""
    cdef Py_ssize_t p = len(mats), g, kmax = 1
    cdef cplx[:, ::1] u
    cdef cplx[:, ::1] e
    cdef Py_ssize_t[::1] lo
    cdef Py_ssize_t[::1] ro
    cdef int kind
    for g in range(p):
        kmax = max(kmax, len(loc_offs[g]))
    cdef cplx* buf = <cplx*> malloc(kmax * sizeof(cplx))
    envs = {}
    scratch = {}
    try:
        for g in range(p - 1, -1, -1):
            u = mats[g]
            lo = loc_offs[g]
            ro = rest_offs[g]
            kind = kinds[g]
            _apply_left(t, u, True, lo, ro, buf)
            if kind != 0:
                _optimize(t, u, lo, ro, kind, beta, envs, scratch)
            _apply_right(t, u, False, lo, ro, buf)
        for g in range(p):
            u = mats[g]
            lo = loc_offs[g]
            ro = rest_offs[g]
            kind = kinds[g]
            _apply_right(t, u, True, lo, ro, buf)
            if kind != 0:
                _optimize(t, u, lo, ro, kind, beta, envs, scratch)
            _apply_left(t, u, False, lo, ro, buf)
    finally:
        free(buf)


cdef _optimize(cplx[:, ::1] t, cplx[:, ::1] u, Py_ssize_t[::1] lo, Py_ssize_t[::1] ro,
               int kind, double beta, dict envs, dict scratch):
    cdef Py_ssize_t k = lo.shape[0]
    cdef cplx[:, ::1] e
    cdef _Scratch sc
    if k not in envs:
        envs[k] = np.empty((k, k), dtype=complex)
        scratch[k] = _Scratch(k)
    e = envs[k]
    _env(t, lo, ro, e)
    if kind == 2:
        _rz_update(e, u, beta)
    else:
        sc = scratch[k]
        if _polar_update(e, u, beta, sc) != 0:
            raise SVDConvergenceError("Jacobi SVD did not converge")
