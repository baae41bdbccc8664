# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled sample loops for the adaptive equalizers.

Mirrors ``_kernels_py`` function for function; see that module for the
calling convention.
"""

from libc.math cimport sqrt, cos, sin, atan2, isfinite, M_PI

cdef enum:
    POWER = 0
    GAIN_MAG = 1
    PHASE = 2
    INTEGRATOR = 3
    COUNT = 4

STATE_SIZE = 5


cdef inline double _norm2(double complex[::1] taps) nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(taps.shape[0]):
        acc += taps[i].real * taps[i].real + taps[i].imag * taps[i].imag
    return acc


cdef inline bint _diverged(double complex[::1] taps, double limit2) nogil:
    cdef double n2 = _norm2(taps)
    return not isfinite(n2) or n2 > limit2


cdef inline double complex _output(const double complex[::1] y, double complex[::1] taps,
                                   Py_ssize_t n) nogil:
    # z = C^H Y with Y[i] = y[n - i]
    cdef Py_ssize_t i
    cdef double re = 0.0, im = 0.0
    cdef double complex c, v
    for i in range(taps.shape[0]):
        c = taps[i]
        v = y[n - i]
        re += c.real * v.real + c.imag * v.imag
        im += c.real * v.imag - c.imag * v.real
    return re + 1j * im


cdef inline void _update(const double complex[::1] y, double complex[::1] taps,
                         Py_ssize_t n, double complex step) nogil:
    # taps -= step * Y
    cdef Py_ssize_t i
    for i in range(taps.shape[0]):
        taps[i] = taps[i] - step * y[n - i]


cpdef double wrap_phase(double phi) noexcept nogil:
    while phi > M_PI:
        phi -= 2.0 * M_PI
    while phi <= -M_PI:
        phi += 2.0 * M_PI
    return phi


def lms_run(const double complex[::1] y, const double complex[::1] desired,
            double complex[::1] taps, double mu, Py_ssize_t start,
            double complex[::1] z_out, double limit2):
    cdef Py_ssize_t k, n
    cdef double complex z, e
    cdef Py_ssize_t status = -1
    with nogil:
        for k in range(z_out.shape[0]):
            n = start + k
            z = _output(y, taps, n)
            z_out[k] = z
            e = z - desired[k]
            _update(y, taps, n, mu * e.conjugate())
            if _diverged(taps, limit2):
                status = k
                break
    return status


def cma_run(const double complex[::1] y, double complex[::1] taps, double mu, double r2,
            Py_ssize_t start, double complex[::1] z_out, double limit2):
    cdef Py_ssize_t k, n
    cdef double complex z, e
    cdef Py_ssize_t status = -1
    with nogil:
        for k in range(z_out.shape[0]):
            n = start + k
            z = _output(y, taps, n)
            z_out[k] = z
            e = z.conjugate() * (z.real * z.real + z.imag * z.imag - r2)
            _update(y, taps, n, mu * e)
            if _diverged(taps, limit2):
                status = k
                break
    return status


def blind_run(const double complex[::1] y, double complex[::1] taps, double mu, double r2,
              double kurt_abs, double sigma_a2, double lam, double kp, double ki,
              long burn_in, const double complex[::1] points, Py_ssize_t start,
              double[::1] state, double complex[::1] z_out, double complex[::1] zc_out,
              double[::1] gain_out, double[::1] phase_out, double limit2):
    cdef Py_ssize_t k, n, i, best
    cdef Py_ssize_t n_pts = points.shape[0]
    cdef double power = state[POWER]
    cdef double amag = state[GAIN_MAG]
    cdef double phi = state[PHASE]
    cdef double integ = state[INTEGRATOR]
    cdef long count = <long> state[COUNT]
    cdef double p, d, gain, dr, di, dd, best_d, e
    cdef double complex z, r, a
    cdef Py_ssize_t status = -1
    with nogil:
        for k in range(z_out.shape[0]):
            n = start + k
            z = _output(y, taps, n)
            z_out[k] = z
            p = z.real * z.real + z.imag * z.imag
            _update(y, taps, n, mu * z.conjugate() * (p - r2))

            power = lam * power + (1.0 - lam) * p
            count += 1
            if count > burn_in:
                d = 2.0 * power - r2
                if d > 0.0:
                    amag = sqrt(power * sqrt(kurt_abs * power / d))
            gain = sigma_a2 / amag if amag > 0.0 else 1.0
            gain_out[k] = gain

            r = gain * z * (cos(phi) - 1j * sin(phi))
            best = 0
            best_d = 1e300
            for i in range(n_pts):
                dr = r.real - points[i].real
                di = r.imag - points[i].imag
                dd = dr * dr + di * di
                if dd < best_d:
                    best_d = dd
                    best = i
            zc_out[k] = r
            phase_out[k] = phi
            a = points[best]
            e = atan2(r.imag * a.real - r.real * a.imag, r.real * a.real + r.imag * a.imag)
            integ += e
            phi = wrap_phase(phi + kp * e + ki * integ)

            if _diverged(taps, limit2):
                status = k
                break
    state[POWER] = power
    state[GAIN_MAG] = amag
    state[PHASE] = phi
    state[INTEGRATOR] = integ
    state[COUNT] = count
    return status
