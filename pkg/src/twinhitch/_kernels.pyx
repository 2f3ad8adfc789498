# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; mirror the signatures in ``_kernels_py``."""

from libc.math cimport NAN

import numpy as np

cdef extern from "complex.h" nogil:
    double complex csqrt(double complex)
    double complex ccosh(double complex)
    double complex csinh(double complex)
    double complex cexp(double complex)
    double cabs(double complex)
    double creal(double complex)
    double cimag(double complex)
    double complex conj(double complex)

cdef double SERIES_CUTOFF = 1e-4
cdef double ASYMPTOTIC_CUTOFF = 350.0
cdef double LN2 = 0.6931471805599453
cdef double complex I = 1j


cdef inline void _entries(double kx, double z, double complex a1, double complex a2c,
                          double b, double k, double complex phase,
                          double complex *m11, double complex *m12,
                          double complex *m22) noexcept nogil:
    # phase = exp(i delta_a z), shared by every kx
    cdef double complex a = 0.5 * (a1 + a2c) - kx * kx / (2.0 * k)
    cdef double complex xi2 = b * b - a * a
    cdef double complex s = csqrt(xi2)
    cdef double complex w = s * z
    cdef double complex pref = phase, ch, sh, w2, e, ei
    cdef double aw = cabs(w)
    if creal(w) > ASYMPTOTIC_CUTOFF:
        pref = cexp(I * 0.5 * (a1 - a2c) * z + w - LN2)
        ch = 1.0
        sh = 1.0 / s
    elif aw < SERIES_CUTOFF:
        w2 = xi2 * (z * z)
        ch = 1.0 + 0.5 * w2 * (1.0 + w2 / 12.0)
        sh = z * (1.0 + w2 / 6.0 * (1.0 + w2 / 20.0))
    elif aw < 0.5:
        ch = ccosh(w)
        sh = csinh(w) / s
    else:
        e = cexp(w)
        ei = 1.0 / e
        ch = 0.5 * (e + ei)
        sh = 0.5 * (e - ei) / s
    cdef double complex ias = I * a * sh
    m11[0] = pref * (ch + ias)
    m22[0] = pref * (ch - ias)
    m12[0] = pref * (I * b * sh)


cdef inline double complex _phase(double complex a1, double complex a2c, double z) noexcept nogil:
    return cexp(I * 0.5 * (a1 - a2c) * z)


cdef double _gain(const double[::1] kxv, const double[::1] wv, double z, double complex a1,
                  double complex a2c, double b, double k) noexcept nogil:
    cdef Py_ssize_t j, n = kxv.shape[0]
    cdef double complex m11, m12, m22
    cdef double complex phase = _phase(a1, a2c, z)
    cdef double total = 0.0, comp = 0.0, term, t
    for j in range(n):
        _entries(kxv[j], z, a1, a2c, b, k, phase, &m11, &m12, &m22)
        term = wv[j] * (creal(m11) * creal(m11) + cimag(m11) * cimag(m11))
        # Kahan summation
        term = term - comp
        t = total + term
        comp = (t - total) - term
        total = t
    return total


def transfer_entries(kx, double z, a1, a2, double b, double k):
    cdef const double[::1] kxv = np.ascontiguousarray(kx, dtype=np.float64)
    cdef Py_ssize_t n = kxv.shape[0], j
    out11 = np.empty(n, dtype=np.complex128)
    out12 = np.empty(n, dtype=np.complex128)
    out22 = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] o11 = out11
    cdef double complex[::1] o12 = out12
    cdef double complex[::1] o22 = out22
    cdef double complex ca1 = complex(a1)
    cdef double complex ca2c = conj(<double complex>complex(a2))
    cdef double complex phase = _phase(ca1, ca2c, z)
    with nogil:
        for j in range(n):
            _entries(kxv[j], z, ca1, ca2c, b, k, phase, &o11[j], &o12[j], &o22[j])
    return out11, out12, -out12, out22


def weighted_gain(kx, weight, double z, a1, a2, double b, double k):
    cdef const double[::1] kxv = np.ascontiguousarray(kx, dtype=np.float64)
    cdef const double[::1] wv = np.ascontiguousarray(weight, dtype=np.float64)
    if wv.shape[0] != kxv.shape[0]:
        raise ValueError("kx and weight differ in length")
    cdef double complex ca1 = complex(a1)
    cdef double complex ca2c = conj(<double complex>complex(a2))
    cdef double total
    with nogil:
        total = _gain(kxv, wv, z, ca1, ca2c, b, k)
    return total


def bisect_gain(kx, weight, double z, a1, a2, double k, double target,
                double lo, double hi, double g_lo, double g_hi, double rtol, int max_iter=200):
    """Bisect b in [lo, hi] for weighted_gain == target.

    Returns ``(b, failed_at, bs, gs)``; ``failed_at`` is NaN unless an evaluated
    gain fell outside ``(g_lo, g_hi)`` of the current bracket.
    """
    cdef const double[::1] kxv = np.ascontiguousarray(kx, dtype=np.float64)
    cdef const double[::1] wv = np.ascontiguousarray(weight, dtype=np.float64)
    if wv.shape[0] != kxv.shape[0]:
        raise ValueError("kx and weight differ in length")
    cdef double complex ca1 = complex(a1)
    cdef double complex ca2c = conj(<double complex>complex(a2))
    bs = np.empty(max_iter)
    gs = np.empty(max_iter)
    cdef double[::1] bv = bs
    cdef double[::1] gv = gs
    cdef int it = 0
    cdef double mid, g, failed = NAN
    with nogil:
        while hi - lo > rtol * hi and it < max_iter:
            mid = 0.5 * (lo + hi)
            g = _gain(kxv, wv, z, ca1, ca2c, mid, k)
            bv[it] = mid
            gv[it] = g
            it += 1
            if not (g_lo < g < g_hi):
                failed = mid
                break
            if g < target:
                lo = mid
                g_lo = g
            else:
                hi = mid
                g_hi = g
    return 0.5 * (lo + hi), failed, bs[:it], gs[:it]


def rk4_propagate(kx, z, a1, a2, b, double k, v1, v2, steps):
    arrs = np.broadcast_arrays(
        np.asarray(kx, dtype=np.float64),
        np.asarray(z, dtype=np.float64),
        np.asarray(a1, dtype=np.complex128),
        np.asarray(a2, dtype=np.complex128),
        np.asarray(b, dtype=np.float64),
        np.asarray(v1, dtype=np.complex128),
        np.asarray(v2, dtype=np.complex128),
    )
    shape = arrs[0].shape
    cdef const double[::1] kxv = np.ascontiguousarray(arrs[0]).ravel()
    cdef const double[::1] zv = np.ascontiguousarray(arrs[1]).ravel()
    cdef const double complex[::1] a1v = np.ascontiguousarray(arrs[2]).ravel()
    cdef const double complex[::1] a2v = np.ascontiguousarray(arrs[3]).ravel()
    cdef const double[::1] bv = np.ascontiguousarray(arrs[4]).ravel()
    out1 = np.array(arrs[5], dtype=np.complex128).ravel()
    out2 = np.array(arrs[6], dtype=np.complex128).ravel()
    cdef double complex[::1] x1v = out1
    cdef double complex[::1] x2v = out2
    cdef long nsteps = int(steps)
    cdef Py_ssize_t n = kxv.shape[0], j
    cdef long s
    cdef double dk, h
    cdef double complex c11, c12, c21, c22, x1, x2, y1, y2
    cdef double complex k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b
    with nogil:
        for j in range(n):
            dk = kxv[j] * kxv[j] / (2.0 * k)
            c11 = I * (a1v[j] - dk)
            c12 = I * bv[j]
            c21 = -I * bv[j]
            c22 = I * (dk - conj(a2v[j]))
            h = zv[j] / nsteps
            x1 = x1v[j]
            x2 = x2v[j]
            for s in range(nsteps):
                k1a = c11 * x1 + c12 * x2
                k1b = c21 * x1 + c22 * x2
                y1 = x1 + 0.5 * h * k1a
                y2 = x2 + 0.5 * h * k1b
                k2a = c11 * y1 + c12 * y2
                k2b = c21 * y1 + c22 * y2
                y1 = x1 + 0.5 * h * k2a
                y2 = x2 + 0.5 * h * k2b
                k3a = c11 * y1 + c12 * y2
                k3b = c21 * y1 + c22 * y2
                y1 = x1 + h * k3a
                y2 = x2 + h * k3b
                k4a = c11 * y1 + c12 * y2
                k4b = c21 * y1 + c22 * y2
                x1 = x1 + h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
                x2 = x2 + h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
            x1v[j] = x1
            x2v[j] = x2
    return out1.reshape(shape), out2.reshape(shape)
