"""Sample-by-sample adaptive equalizers and the blind receiver.

The blind receiver chains a CMA equalizer, a gain corrector driven by a
recursive output-power estimate, and a decision-directed phase loop. Since
the CM and Wiener solutions are collinear, the corrected CMA output should
match what a trained LMS equalizer produces.

Taps follow the ``z_n = C^H Y_n`` convention, so the stochastic gradient
steps are ``C <- C - mu conj(e_n) Y_n``. Long runs go through the compiled
kernels selected in ``_backend``; the single-step functions here are the
readable reference and are used to cross-check those kernels.
"""

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from . import _backend
from ._kernels_py import GAIN_MAG, PHASE, POWER, STATE_SIZE, wrap_phase
from .errors import DimensionError, DivergenceError, GainDomainError

#: Tap norm growth (relative to the initial norm) treated as divergence.
DIVERGENCE_FACTOR = 1e6

DEFAULT_LAMBDA = 0.99
DEFAULT_KP = 0.01
DEFAULT_KI = 1e-4


@dataclass(frozen=True, eq=False)
class AdaptiveEqualizer:
    """Tap vector plus step size of an LMS or CMA equalizer."""

    taps: np.ndarray
    mu: float
    algorithm: str = "lms"
    reference_norm: float = 1.0

    def __post_init__(self):
        if self.algorithm not in ("lms", "cma"):
            raise ValueError(f"algorithm must be 'lms' or 'cma', got {self.algorithm!r}")
        if self.mu < 0:
            raise ValueError(f"step size must be >= 0, got {self.mu}")

    @classmethod
    def create(cls, taps, mu, algorithm="lms"):
        taps = np.array(taps, dtype=np.complex128)
        return cls(taps=taps, mu=float(mu), algorithm=algorithm,
                   reference_norm=max(float(np.linalg.norm(taps)), 1.0))

    @property
    def M(self):
        return self.taps.shape[0]

    @property
    def divergence_limit2(self):
        return (DIVERGENCE_FACTOR * self.reference_norm) ** 2


def center_tap_init(M):
    """Zero taps except the center one (index ``(M-1)//2``), set to 1."""
    taps = np.zeros(M, dtype=np.complex128)
    taps[(M - 1) // 2] = 1.0
    return taps


def _check_window(state, y_window):
    Y = np.asarray(y_window, dtype=np.complex128)
    if Y.shape != state.taps.shape:
        raise DimensionError(f"window length {Y.shape} does not match {state.M} taps")
    return Y


def _guard(taps, state, where=None):
    n2 = float(np.vdot(taps, taps).real)
    if not math.isfinite(n2) or n2 > state.divergence_limit2:
        raise DivergenceError("tap vector diverged", iteration=where)


def lms_step(state, y_window, desired):
    """One data-aided LMS update. Returns ``(new_state, z_n)``.

    ``z_n`` is computed with the taps before the update.
    """
    Y = _check_window(state, y_window)
    z = complex(np.vdot(state.taps, Y))
    taps = state.taps - state.mu * np.conj(z - desired) * Y
    _guard(taps, state)
    return replace(state, taps=taps), z


def cma_step(state, y_window, dispersion):
    """One blind CMA (Godard p=2) update. Returns ``(new_state, z_n)``."""
    if not dispersion > 0:
        raise ValueError(f"dispersion constant must be > 0, got {dispersion}")
    Y = _check_window(state, y_window)
    z = complex(np.vdot(state.taps, Y))
    taps = state.taps - state.mu * np.conj(z) * (abs(z) ** 2 - dispersion) * Y
    _guard(taps, state)
    return replace(state, taps=taps), z


@dataclass(frozen=True)
class PowerTracker:
    """Exponentially weighted estimate of the output power E|z|^2."""

    estimate: float = 0.0
    lam: float = DEFAULT_LAMBDA

    def __post_init__(self):
        if not 0 <= self.lam < 1:
            raise ValueError(f"forgetting factor must be in [0, 1), got {self.lam}")


def power_update(tracker, z):
    """``sigma^2(n) = lam sigma^2(n-1) + (1 - lam) |z_n|^2``."""
    p = z.real * z.real + z.imag * z.imag
    return replace(tracker, estimate=tracker.lam * tracker.estimate + (1.0 - tracker.lam) * p)


def alpha_hat(power, dispersion, kurtosis):
    """Blind estimate of ``|alpha|`` from the output power.

    ``|alpha|^2 = P sqrt(|K| P / (2P - R2))``. Valid only for ``P > R2/2``,
    which holds near convergence since the CM output power is at least R2/2.

    Raises
    ------
    GainDomainError
        If ``power <= dispersion / 2``.
    """
    d = 2.0 * power - dispersion
    if not d > 0:
        raise GainDomainError(f"output power {power:g} <= R2/2 = {dispersion / 2:g}")
    return math.sqrt(power * math.sqrt(abs(kurtosis) * power / d))


@dataclass(frozen=True)
class PhaseLoop:
    """Proportional-plus-integral decision-directed phase tracker."""

    phase: float = 0.0
    kp: float = DEFAULT_KP
    ki: float = DEFAULT_KI
    integrator: float = 0.0


def phase_step(loop, z, alphabet):
    """Derotate ``z`` by the current phase, decide, and update the loop.

    Returns ``(new_loop, rotated, decision)``. The phase error is
    ``arg(rotated * conj(decision))``.
    """
    rotated = complex(z) * complex(math.cos(loop.phase), -math.sin(loop.phase))
    decision = complex(alphabet.decide(rotated))
    e = math.atan2(
        rotated.imag * decision.real - rotated.real * decision.imag,
        rotated.real * decision.real + rotated.imag * decision.imag,
    )
    integ = loop.integrator + e
    phase = wrap_phase(loop.phase + loop.kp * e + loop.ki * integ)
    return replace(loop, phase=phase, integrator=integ), rotated, decision


@dataclass(eq=False)
class AdaptiveRun:
    """Result of running an adaptive equalizer over a record.

    ``outputs[k]`` is the equalizer output at time ``start + k``;
    ``trajectory`` holds ``(iteration, taps)`` snapshots when requested.
    """

    taps: np.ndarray
    outputs: np.ndarray
    start: int
    trajectory: list


@dataclass(eq=False)
class BlindRun(AdaptiveRun):
    """Blind receiver run: CMA taps plus the gain/phase corrected stream."""

    corrected: np.ndarray = None
    gains: np.ndarray = None
    phases: np.ndarray = None
    final_gain: float = 1.0
    final_phase: float = 0.0
    alpha_mag: float = 0.0
    power: float = 0.0

    @property
    def effective_taps(self):
        """Taps of CMA + gain + rotator viewed as one linear equalizer."""
        return self.final_gain * np.exp(1j * self.final_phase) * self.taps


def _chunks(total, every):
    if not every:
        return [(0, total)]
    return [(lo, min(lo + every, total)) for lo in range(0, total, every)]


def _prepare(record, M, init):
    y = np.ascontiguousarray(record.received, dtype=np.complex128)
    if len(y) < M:
        raise ValueError(f"record has {len(y)} samples, fewer than M = {M}")
    taps = center_tap_init(M) if init is None else np.array(init, dtype=np.complex128)
    if taps.shape != (M,):
        raise DimensionError(f"initial taps have shape {taps.shape}, expected ({M},)")
    return y, taps, M - 1, len(y) - (M - 1)


def _raise_if_diverged(status, offset):
    if status >= 0:
        raise DivergenceError(f"tap vector diverged at iteration {offset + status}",
                              iteration=offset + status)


def run_lms(record, M, mu, nu, init=None, snapshot_every=None, backend=None):
    """Train an LMS equalizer on ``record`` with desired symbol ``a_{n-nu}``."""
    k = _backend.get_kernels(backend)
    y, taps, start, n_out = _prepare(record, M, init)
    state = AdaptiveEqualizer.create(taps, mu, "lms")
    desired = np.ascontiguousarray(record.delayed_symbols(nu, start), dtype=np.complex128)
    z = np.empty(n_out, dtype=np.complex128)
    trajectory = [(0, taps.copy())] if snapshot_every else []
    for lo, hi in _chunks(n_out, snapshot_every):
        status = k.lms_run(y, desired[lo:hi], taps, float(mu), start + lo, z[lo:hi],
                           state.divergence_limit2)
        _raise_if_diverged(status, lo)
        if snapshot_every:
            trajectory.append((hi, taps.copy()))
    return AdaptiveRun(taps=taps, outputs=z, start=start, trajectory=trajectory)


def run_cma(record, M, mu, dispersion, init=None, snapshot_every=None, backend=None):
    """Blind CMA over ``record`` from center-tap (or ``init``) initialization."""
    k = _backend.get_kernels(backend)
    y, taps, start, n_out = _prepare(record, M, init)
    state = AdaptiveEqualizer.create(taps, mu, "cma")
    z = np.empty(n_out, dtype=np.complex128)
    trajectory = [(0, taps.copy())] if snapshot_every else []
    for lo, hi in _chunks(n_out, snapshot_every):
        status = k.cma_run(y, taps, float(mu), float(dispersion), start + lo, z[lo:hi],
                           state.divergence_limit2)
        _raise_if_diverged(status, lo)
        if snapshot_every:
            trajectory.append((hi, taps.copy()))
    return AdaptiveRun(taps=taps, outputs=z, start=start, trajectory=trajectory)


def blind_receiver_run(record, M, mu, alphabet, lam=DEFAULT_LAMBDA, kp=DEFAULT_KP,
                       ki=DEFAULT_KI, burn_in=None, init=None, snapshot_every=None,
                       backend=None):
    """CMA equalizer followed by blind gain correction and a DD phase loop.

    The gain ``sigma_a^2 / |alpha_hat|`` engages after ``burn_in`` samples
    (default ``10 M``); until then, and whenever the power estimate falls
    outside the formula's domain, the previous gain is held.
    """
    k = _backend.get_kernels(backend)
    y, taps, start, n_out = _prepare(record, M, init)
    eq = AdaptiveEqualizer.create(taps, mu, "cma")
    burn_in = 10 * M if burn_in is None else int(burn_in)
    if not 0 <= lam < 1:
        raise ValueError(f"forgetting factor must be in [0, 1), got {lam}")
    points = np.ascontiguousarray(alphabet.points, dtype=np.complex128)
    state = np.zeros(STATE_SIZE)
    z = np.empty(n_out, dtype=np.complex128)
    zc = np.empty(n_out, dtype=np.complex128)
    gains = np.empty(n_out)
    phases = np.empty(n_out)
    trajectory = [(0, taps.copy())] if snapshot_every else []
    for lo, hi in _chunks(n_out, snapshot_every):
        status = k.blind_run(
            y, taps, float(mu), alphabet.dispersion, abs(alphabet.kurtosis), alphabet.variance,
            float(lam), float(kp), float(ki), burn_in, points, start + lo, state,
            z[lo:hi], zc[lo:hi], gains[lo:hi], phases[lo:hi], eq.divergence_limit2,
        )
        _raise_if_diverged(status, lo)
        if snapshot_every:
            trajectory.append((hi, taps.copy()))
    amag = state[GAIN_MAG]
    return BlindRun(
        taps=taps,
        outputs=z,
        start=start,
        trajectory=trajectory,
        corrected=zc,
        gains=gains,
        phases=phases,
        final_gain=alphabet.variance / amag if amag > 0 else 1.0,
        final_phase=float(state[PHASE]),
        alpha_mag=float(amag),
        power=float(state[POWER]),
    )


def estimate_delay(outputs, record, start, max_delay):
    """Delay ``nu`` maximizing ``|corr(z_n, a_{n-nu})|`` over ``0..max_delay``.

    Uses the known transmitted symbols, so it is an evaluation aid rather
    than part of the blind receiver.
    """
    z = np.asarray(outputs)
    best, best_val = 0, -1.0
    for nu in range(max_delay + 1):
        a = record.delayed_symbols(nu, start, start + len(z))
        val = abs(np.vdot(a, z))
        if val > best_val:
            best, best_val = nu, val
    return best


def align(reference, taps):
    """Least-squares complex factor ``beta`` minimizing ``||reference - beta taps||``.

    Returns ``(beta, beta * taps)``.
    """
    taps = np.asarray(taps, dtype=np.complex128)
    denom = np.vdot(taps, taps).real
    beta = complex(np.vdot(taps, reference) / denom) if denom > 0 else 0j
    return beta, beta * taps


def write_trajectory_csv(path, trajectory):
    """Tap snapshots as ``iteration, tap, re, im`` rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "tap", "re", "im"])
        for it, taps in trajectory:
            for i, c in enumerate(taps):
                w.writerow([it, i, f"{c.real:.16e}", f"{c.imag:.16e}"])
