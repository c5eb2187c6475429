# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled chain evaluation kernel.

Branch semantics mirror ``_chain_py.chain_apply`` exactly; the equivalence
test in the suite compares the two backends step kind by step kind.
"""

import numpy as np
cimport numpy as cnp

cdef extern from "complex.h" nogil:
    double complex csqrt(double complex)
    double cabs(double complex)
    double creal(double complex)
    double cimag(double complex)
    double complex conj(double complex)

cdef extern from "math.h" nogil:
    bint isfinite(double)
    double INFINITY


cdef inline bint _bad(double complex z) nogil:
    return not (isfinite(creal(z)) and isfinite(cimag(z)))


cdef inline double complex _inf() nogil:
    return INFINITY + 1j * INFINITY


cdef inline double complex _zip_sqrt(double complex m, double h) nogil:
    """sqrt(m^2 + h^2), branch with Im >= 0 and sign(Re) matching Re(m)."""
    cdef double complex s0
    if cabs(m) > h * 1e8:
        return m * csqrt(1.0 + (h / m) * (h / m))
    s0 = csqrt(m * m + h * h)
    if creal(m) < 0.0 and creal(s0) > 0.0:
        s0 = -s0
    return s0


cdef inline double complex _unzip_sqrt(double complex w, double h) nogil:
    """sqrt(w^2 - h^2), branch with Im >= 0 and sign(Re) matching Re(w)."""
    cdef double complex u0
    if cabs(w) > h * 1e8:
        return w * csqrt(1.0 - (h / w) * (h / w))
    u0 = csqrt(w * w - h * h)
    if creal(w) < 0.0 and creal(u0) > 0.0:
        u0 = -u0
    return u0


cdef extern from "complex.h" nogil:
    double complex cexp(double complex)

DEF NEWTON_ITERS = 12


cdef inline double complex _poly(const double complex* coeffs, Py_ssize_t n,
                                 double complex z) nogil:
    cdef double complex acc = 0.0
    cdef Py_ssize_t t
    for t in range(n - 1, -1, -1):
        acc = acc * z + coeffs[t]
    return acc


cdef inline double complex _poly_deriv(const double complex* coeffs, Py_ssize_t n,
                                       double complex z) nogil:
    cdef double complex acc = 0.0
    cdef Py_ssize_t t
    for t in range(n - 1, 0, -1):
        acc = acc * z + t * coeffs[t]
    return acc


cdef double complex _step(signed char kind, const double complex* p,
                          const double complex* pool, double complex z) nogil:
    cdef double complex a, b, c, d, den, m, u, e, f, fp, w, x, arg, stp
    cdef double mu, h, sigma
    cdef Py_ssize_t off, cnt, it
    if kind == 0:  # MOBIUS
        a = p[0]; b = p[1]; c = p[2]; d = p[3]
        if _bad(z):
            return a / c if c != 0 else _inf()
        den = c * z + d
        if den == 0:
            return _inf()
        return (a * z + b) / den
    elif kind == 1:  # ZIP_OPEN
        if _bad(z):
            return 1j
        den = z - p[1]
        if den == 0:
            return _inf()
        return 1j * csqrt((z - p[0]) / den)
    elif kind == 2:  # ZIP
        mu = creal(p[0]); h = creal(p[1])
        if _bad(z):
            if mu == 0.0:
                return _inf()
            m = -1.0 / mu
        else:
            den = 1.0 - mu * z
            if den == 0:
                return _inf()
            m = z / den
        return _zip_sqrt(m, h)
    elif kind == 3:  # SQUARE
        sigma = creal(p[0])
        if _bad(z):
            return _inf()
        return sigma * z * z
    elif kind == 4:  # UNZIP
        mu = creal(p[0]); h = creal(p[1])
        if _bad(z):
            return (1.0 / mu) + 0j if mu != 0.0 else _inf()
        u = _unzip_sqrt(z, h)
        den = 1.0 + mu * u
        if den == 0:
            return _inf()
        return u / den
    elif kind == 5:  # SQRT
        sigma = creal(p[0])
        if _bad(z):
            return _inf()
        u = csqrt(z / sigma)
        if sigma < 0.0:
            u = -u
        return u
    elif kind == 6:  # CONJ
        if _bad(z):
            return _inf()
        return conj(z)
    elif kind == 7 or kind == 8:  # EXPPOLY / EXPPOLY_EXT
        if _bad(z):
            return _inf()
        off = <Py_ssize_t> creal(p[0]); cnt = <Py_ssize_t> creal(p[1])
        arg = 1.0 / z if kind == 8 else z
        return z * cexp(-_poly(pool + off, cnt, arg))
    elif kind == 9 or kind == 10:  # Newton inverses
        if _bad(z):
            return _inf()
        off = <Py_ssize_t> creal(p[0]); cnt = <Py_ssize_t> creal(p[1])
        w = z
        x = w
        for it in range(NEWTON_ITERS):
            if kind == 9:
                e = cexp(-_poly(pool + off, cnt, x))
                f = x * e - w
                fp = e * (1.0 - x * _poly_deriv(pool + off, cnt, x))
            else:
                u = 1.0 / x
                e = cexp(-_poly(pool + off, cnt, u))
                f = x * e - w
                fp = e * (1.0 + _poly_deriv(pool + off, cnt, u) * u)
            if fp != 0:
                stp = f / fp
            else:
                stp = 0.0
            x = x - stp
        return x
    return z


def chain_apply(cnp.ndarray[cnp.int8_t, ndim=1] kinds,
                cnp.ndarray[cnp.complex128_t, ndim=2] params,
                cnp.ndarray[cnp.complex128_t, ndim=1] pool,
                cnp.ndarray[cnp.complex128_t, ndim=1] z):
    """Apply the encoded chain to a 1-d complex array (returns a new array)."""
    cdef Py_ssize_t n = z.shape[0]
    cdef Py_ssize_t nsteps = kinds.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.array(z, dtype=np.complex128, copy=True)
    cdef Py_ssize_t i, k
    cdef double complex v
    cdef const signed char* kp = <const signed char*> kinds.data
    cdef const double complex* pp = <const double complex*> params.data
    cdef const double complex* plp = <const double complex*> pool.data
    with nogil:
        for i in range(n):
            v = out[i]
            for k in range(nsteps):
                v = _step(kp[k], pp + 4 * k, plp, v)
            out[i] = v
    return out
