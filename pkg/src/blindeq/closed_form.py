"""Closed-form finite-length CM and MMSE equalizers.

Conventions
-----------
The equalizer output is ``z_n = C^H Y_n``. For a delay ``nu`` let
``g = H e_nu`` be the corresponding channel column and
``Omega_nu = g^H R_yy^{-1} g``. The CM solution is

    C = |alpha| exp(j theta) R_yy^{-1} g,
    |alpha|^2 = R2 / (Omega_nu (2 - |K(a)| Omega_nu^2)),

and the Wiener solution is ``C_mmse = sigma_a^2 R_yy^{-1} g``, so that
``C_mmse = beta C`` with ``beta = sigma_a^2 exp(-j theta) / |alpha|``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import AlphabetError, DegenerateDelayError, DimensionError, NotPositiveDefiniteError
from .linalg import ChannelMatrix, cholesky_factor, hermitian_solve


# Omega below this is treated as "no signal path at this delay"
_OMEGA_FLOOR = 1e-12


def _matrix(H):
    return H.matrix if isinstance(H, ChannelMatrix) else np.asarray(H, dtype=np.complex128)


@dataclass(frozen=True, eq=False)
class ClosedFormSolution:
    """CM equalizer at a given delay together with its theoretical constants."""

    taps: np.ndarray
    nu: int
    omega: float
    alpha_mag: float
    theta: float
    predicted_power: float

    @property
    def alpha(self):
        return self.alpha_mag * np.exp(1j * self.theta)


@dataclass(frozen=True, eq=False)
class CombinedResponse:
    """Global channel-equalizer response.

    ``gains[l]`` multiplies ``a_{n-l}`` in ``z_n``, i.e. ``gains = C^H H``
    read as a vector; ``cursor`` is ``gains[nu]``.
    """

    gains: np.ndarray
    nu: int

    @property
    def cursor(self):
        return complex(self.gains[self.nu])

    @property
    def residual(self):
        """Gains with the cursor removed."""
        r = self.gains.copy()
        r[self.nu] = 0
        return r


@dataclass(frozen=True)
class MomentReport:
    """Second/fourth output moments and the CM cost values derived from them."""

    m2: float
    m4_exact: float
    m4_gaussian_approx: float
    cm_cost: float
    surrogate_cost: float
    gaussian_gap: float


def build_ryy(H, sigma_a2, sigma_b2):
    """Received autocorrelation ``sigma_b^2 I + sigma_a^2 H H^H``.

    Raises ``NotPositiveDefiniteError`` when ``sigma_b2 == 0`` and ``H`` is
    rank deficient.
    """
    if not sigma_a2 > 0:
        raise ValueError(f"symbol variance must be > 0, got {sigma_a2}")
    if sigma_b2 < 0:
        raise ValueError(f"noise variance must be >= 0, got {sigma_b2}")
    A = _matrix(H)
    R = sigma_b2 * np.eye(A.shape[0]) + sigma_a2 * (A @ A.conj().T)
    R = 0.5 * (R + R.conj().T)
    if sigma_b2 == 0:
        # zero-forcing limit is allowed only for full row rank H
        cholesky_factor(R)
        if np.linalg.matrix_rank(A) < A.shape[0]:
            raise NotPositiveDefiniteError("noise-free R_yy is singular: H is rank deficient")
    return R


def _check_delay(A, nu):
    if int(nu) != nu or not 0 <= nu < A.shape[1]:
        raise IndexError(f"delay {nu} outside [0, {A.shape[1] - 1}]")
    return int(nu)


def omega(H, R_yy, nu):
    """``Omega_nu = e_nu^H H^H R_yy^{-1} H e_nu`` (real, >= 0)."""
    A = _matrix(H)
    nu = _check_delay(A, nu)
    g = A[:, nu]
    x = hermitian_solve(R_yy, g)
    return float(np.real(np.vdot(g, x)))


def omegas(H, R_yy):
    """``Omega_nu`` for every delay ``nu = 0 .. M+L-2``."""
    A = _matrix(H)
    X = hermitian_solve(R_yy, A)
    return np.real(np.sum(A.conj() * X, axis=0))


def select_delay(H, R_yy):
    """Delay maximizing ``Omega_nu``; ties go to the smallest delay."""
    om = omegas(H, R_yy)
    best = om.max()
    # treat values within rounding of the max as ties
    return int(np.flatnonzero(om >= best - 1e-13 * max(best, 1.0))[0])


def alpha_magnitude(omega_nu, dispersion, kurtosis):
    """``|alpha| = sqrt(R2 / (Omega (2 - |K| Omega^2)))``."""
    if kurtosis >= 0:
        raise AlphabetError(f"closed form requires a sub-Gaussian alphabet, K(a) = {kurtosis}")
    if not omega_nu > _OMEGA_FLOOR:
        raise DegenerateDelayError(f"Omega = {omega_nu:g}: no signal path at this delay")
    denom = 2.0 - abs(kurtosis) * omega_nu**2
    if denom <= 0:
        raise DegenerateDelayError(f"2 - |K| Omega^2 = {denom:g} is not positive")
    return float(np.sqrt(dispersion / (omega_nu * denom)))


def predicted_power(omega_nu, dispersion, kurtosis):
    """Output power ``R2 / (2 - |K| Omega^2)`` at the CM solution."""
    return dispersion / (2.0 - abs(kurtosis) * omega_nu**2)


def _wiener_direction(H, R_yy, nu):
    A = _matrix(H)
    nu = _check_delay(A, nu)
    g = A[:, nu]
    d = hermitian_solve(R_yy, g)
    return d, float(np.real(np.vdot(g, d)))


def cm_equalizer(H, R_yy, nu, alphabet, theta=0.0):
    """Closed-form CM equalizer at delay ``nu`` with phase ``theta``.

    The CM criterion fixes the equalizer only up to ``exp(j theta)``; the
    returned taps are ``|alpha| exp(j theta) R_yy^{-1} H e_nu``.
    """
    d, om = _wiener_direction(H, R_yy, nu)
    amag = alpha_magnitude(om, alphabet.dispersion, alphabet.kurtosis)
    taps = amag * np.exp(1j * theta) * d
    return ClosedFormSolution(
        taps=taps,
        nu=int(nu),
        omega=om,
        alpha_mag=amag,
        theta=float(theta),
        predicted_power=predicted_power(om, alphabet.dispersion, alphabet.kurtosis),
    )


def mmse_equalizer(H, R_yy, nu, sigma_a2):
    """Wiener equalizer ``sigma_a^2 R_yy^{-1} H e_nu`` for delay ``nu``."""
    d, _ = _wiener_direction(H, R_yy, nu)
    return sigma_a2 * d


def mmse_cost(omega_nu, sigma_a2):
    """Minimum mean-square error ``sigma_a^2 (1 - sigma_a^2 Omega_nu)``."""
    return sigma_a2 * (1.0 - sigma_a2 * omega_nu)


def cm_mmse_relation_factor(solution, sigma_a2):
    """``beta`` with ``C_mmse = beta * C_cm``: ``sigma_a^2 exp(-j theta) / |alpha|``."""
    return sigma_a2 * np.exp(-1j * solution.theta) / solution.alpha_mag


def misalignment(a, b):
    """``1 - |<a, b>|^2 / (||a||^2 ||b||^2)``: zero iff ``a`` and ``b`` are collinear."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.shape} vs {b.shape}")
    na = np.vdot(a, a).real
    nb = np.vdot(b, b).real
    if na == 0 and nb == 0:
        return 0.0
    if na == 0 or nb == 0:
        return 1.0
    return float(max(0.0, 1.0 - abs(np.vdot(a, b)) ** 2 / (na * nb)))


def combined_response(C, H, nu):
    """Global response ``C^H H`` of equalizer ``C`` over channel ``H``."""
    A = _matrix(H)
    C = np.asarray(C, dtype=np.complex128)
    if C.shape != (A.shape[0],):
        raise DimensionError(f"equalizer has {C.shape} taps, channel matrix has {A.shape[0]} rows")
    nu = _check_delay(A, nu)
    return CombinedResponse(gains=C.conj() @ A, nu=nu)


def exact_moments(response, C, alphabet, sigma_b2):
    """Exact E|z|^2, E|z|^4 and CM costs for i.i.d. circular symbols in Gaussian noise.

    Fourth-order cumulants of independent circular terms add, so
    ``E|z|^4 = 2 m2^2 + K(a) sum_l |s_l|^4``. The Gaussian approximation keeps
    only the cursor in that sum.
    """
    s = np.asarray(response.gains)
    C = np.asarray(C, dtype=np.complex128)
    K = alphabet.kurtosis
    R2 = alphabet.dispersion
    abs4 = np.abs(s) ** 4
    m2 = float(alphabet.variance * np.sum(np.abs(s) ** 2) + sigma_b2 * np.vdot(C, C).real)
    m4_exact = float(2 * m2**2 + K * np.sum(abs4))
    m4_gauss = float(2 * m2**2 + K * abs4[response.nu])
    gap = float(abs(K) * (np.sum(abs4) - abs4[response.nu]))
    return MomentReport(
        m2=m2,
        m4_exact=m4_exact,
        m4_gaussian_approx=m4_gauss,
        cm_cost=m4_exact - 2 * R2 * m2 + R2**2,
        surrogate_cost=R2 * (R2 - m2),
        gaussian_gap=gap,
    )


def cm_cost(C, H, nu, alphabet, sigma_b2, gaussian_isi=False):
    """CM cost ``E(|z|^2 - R2)^2`` as an explicit function of the taps.

    With ``gaussian_isi=True`` the residual ISI is modelled as Gaussian
    (its kurtosis dropped), which is the cost the closed form minimizes.
    """
    rep = exact_moments(combined_response(C, H, nu), C, alphabet, sigma_b2)
    if not gaussian_isi:
        return rep.cm_cost
    R2 = alphabet.dispersion
    return rep.m4_gaussian_approx - 2 * R2 * rep.m2 + R2**2


def surrogate_lower_bound(omega_nu, dispersion, kurtosis):
    """``R2^2 (1 - 1/(2 - |K| Omega^2))``, attained by the closed form."""
    return dispersion**2 * (1.0 - 1.0 / (2.0 - abs(kurtosis) * omega_nu**2))


@dataclass(frozen=True)
class DelayRow:
    nu: int
    omega: float
    alpha_mag: float
    predicted_power: float
    mmse: float
    gaussian_gap: float
    surrogate_bound: float


def delay_table(H, R_yy, alphabet, sigma_b2):
    """Closed-form quantities for every admissible delay.

    Delays whose Omega is degenerate are skipped.
    """
    A = _matrix(H)
    factor = cholesky_factor(R_yy)
    X = scipy.linalg.cho_solve(factor, A, check_finite=False)
    om = np.real(np.sum(A.conj() * X, axis=0))
    rows = []
    for nu in range(A.shape[1]):
        try:
            amag = alpha_magnitude(om[nu], alphabet.dispersion, alphabet.kurtosis)
        except DegenerateDelayError:
            continue
        C = amag * X[:, nu]
        rep = exact_moments(combined_response(C, A, nu), C, alphabet, sigma_b2)
        rows.append(
            DelayRow(
                nu=nu,
                omega=float(om[nu]),
                alpha_mag=amag,
                predicted_power=predicted_power(om[nu], alphabet.dispersion, alphabet.kurtosis),
                mmse=mmse_cost(om[nu], alphabet.variance),
                gaussian_gap=rep.gaussian_gap,
                surrogate_bound=surrogate_lower_bound(om[nu], alphabet.dispersion, alphabet.kurtosis),
            )
        )
    return rows
