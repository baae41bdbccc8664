"""Pure-Python sample loops for the adaptive equalizers.

Reference implementation of the compiled ``_kernels`` extension; both
modules expose the same functions with the same argument order. Taps and
the ``state`` array are updated in place. Each run returns the index of the
first sample at which the taps diverged, or -1.

Window convention: output ``k`` uses ``n = start + k`` and the received
vector ``[y[n], y[n-1], ..., y[n-M+1]]``.
"""

import math

import numpy as np

# state slots for blind_run
POWER, GAIN_MAG, PHASE, INTEGRATOR, COUNT = range(5)
STATE_SIZE = 5


def _diverged(taps, limit2):
    n2 = float(np.vdot(taps, taps).real)
    return not math.isfinite(n2) or n2 > limit2


def lms_run(y, desired, taps, mu, start, z_out, limit2):
    M = taps.shape[0]
    for k in range(z_out.shape[0]):
        n = start + k
        Y = y[n - M + 1 : n + 1][::-1]
        z = complex(np.vdot(taps, Y))
        z_out[k] = z
        e = z - desired[k]
        taps -= (mu * e.conjugate()) * Y
        if _diverged(taps, limit2):
            return k
    return -1


def cma_run(y, taps, mu, r2, start, z_out, limit2):
    M = taps.shape[0]
    for k in range(z_out.shape[0]):
        n = start + k
        Y = y[n - M + 1 : n + 1][::-1]
        z = complex(np.vdot(taps, Y))
        z_out[k] = z
        e = z.conjugate() * (z.real * z.real + z.imag * z.imag - r2)
        taps -= (mu * e) * Y
        if _diverged(taps, limit2):
            return k
    return -1


def wrap_phase(phi):
    """Wrap to (-pi, pi]."""
    while phi > math.pi:
        phi -= 2.0 * math.pi
    while phi <= -math.pi:
        phi += 2.0 * math.pi
    return phi


def blind_run(y, taps, mu, r2, kurt_abs, sigma_a2, lam, kp, ki, burn_in, points,
              start, state, z_out, zc_out, gain_out, phase_out, limit2):
    M = taps.shape[0]
    n_pts = points.shape[0]
    power = state[POWER]
    amag = state[GAIN_MAG]
    phi = state[PHASE]
    integ = state[INTEGRATOR]
    count = int(state[COUNT])
    status = -1
    for k in range(z_out.shape[0]):
        n = start + k
        Y = y[n - M + 1 : n + 1][::-1]
        z = complex(np.vdot(taps, Y))
        z_out[k] = z
        p = z.real * z.real + z.imag * z.imag
        taps -= (mu * z.conjugate() * (p - r2)) * Y

        power = lam * power + (1.0 - lam) * p
        count += 1
        if count > burn_in:
            d = 2.0 * power - r2
            if d > 0.0:
                amag = math.sqrt(power * math.sqrt(kurt_abs * power / d))
        gain = sigma_a2 / amag if amag > 0.0 else 1.0
        gain_out[k] = gain

        r = gain * z * complex(math.cos(phi), -math.sin(phi))
        best = 0
        best_d = math.inf
        for i in range(n_pts):
            dr = r.real - points[i].real
            di = r.imag - points[i].imag
            dd = dr * dr + di * di
            if dd < best_d:
                best_d = dd
                best = i
        zc_out[k] = r
        phase_out[k] = phi
        e = math.atan2(
            r.imag * points[best].real - r.real * points[best].imag,
            r.real * points[best].real + r.imag * points[best].imag,
        )
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
