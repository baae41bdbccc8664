"""Complex vector and matrix primitives.

Everything here works on dense ``numpy`` arrays. Vectors are 1-D complex
arrays; Hermitian matrices are plain 2-D arrays whose symmetry is checked
where it matters.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionError, NotPositiveDefiniteError

_ABS_FLOOR = 1e-14


def as_complex_vector(x, name="vector"):
    """Return ``x`` as a finite 1-D complex array."""
    v = np.asarray(x, dtype=np.complex128)
    if v.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


@dataclass(frozen=True)
class ChannelMatrix:
    """Banded Toeplitz convolution matrix of an FIR channel.

    ``matrix[i, j] = taps[j - i]`` for ``0 <= j - i <= L`` and zero
    elsewhere, so that ``matrix @ A_n`` stacks ``M`` consecutive channel
    outputs newest first, with ``A_n = [a_n, a_{n-1}, ..., a_{n-(M+L-2)}]``.
    """

    taps: np.ndarray
    matrix: np.ndarray

    @property
    def M(self):
        return self.matrix.shape[0]

    @property
    def L(self):
        return len(self.taps) - 1

    @property
    def n_cols(self):
        return self.matrix.shape[1]

    def column(self, nu):
        """Column ``H e_nu``."""
        if not 0 <= nu < self.n_cols:
            raise IndexError(f"delay {nu} outside [0, {self.n_cols - 1}]")
        return self.matrix[:, nu]


def build_channel_matrix(h, M):
    """Build the ``M x (M+L)`` channel matrix for taps ``h`` (length ``L+1``).

    >>> build_channel_matrix([1, 0.5], 2).matrix.real
    array([[1. , 0.5, 0. ],
           [0. , 1. , 0.5]])
    """
    taps = as_complex_vector(h, "channel taps")
    if taps.size == 0:
        raise ValueError("channel tap vector is empty")
    if int(M) != M or M < 1:
        raise ValueError(f"equalizer length M must be a positive integer, got {M}")
    M = int(M)
    L = taps.size - 1
    H = np.zeros((M, M + L), dtype=np.complex128)
    for i in range(M):
        H[i, i : i + L + 1] = taps
    H.setflags(write=False)
    taps.setflags(write=False)
    return ChannelMatrix(taps=taps, matrix=H)


def matvec(H, x):
    """Multiply a channel matrix (or plain matrix) by a vector."""
    A = H.matrix if isinstance(H, ChannelMatrix) else np.asarray(H)
    x = np.asarray(x, dtype=np.complex128)
    if A.shape[1] != x.shape[0]:
        raise DimensionError(f"cannot multiply {A.shape} matrix by length-{x.shape[0]} vector")
    return A @ x


def inner(a, b):
    """Inner product ``a^H b``, conjugate-linear in the first argument."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def is_hermitian(A, rtol=1e-12):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        return False
    scale = max(np.linalg.norm(A), _ABS_FLOOR)
    return np.linalg.norm(A - A.conj().T) <= rtol * scale


def cholesky_factor(A):
    """Lower Cholesky factor of a Hermitian PD matrix (for repeated solves)."""
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    try:
        return scipy.linalg.cho_factor(A, lower=True, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"matrix is not positive definite: {exc}") from None


def hermitian_solve(A, b):
    """Solve ``A x = b`` for Hermitian positive-definite ``A`` via Cholesky.

    ``b`` may be a vector or a matrix of stacked right-hand sides.

    Raises
    ------
    DimensionError
        If ``A`` is not square or ``b`` does not conform.
    NotPositiveDefiniteError
        If the factorization fails.
    """
    A = np.asarray(A, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    if b.shape[0] != A.shape[0]:
        raise DimensionError(f"right-hand side has {b.shape[0]} rows, matrix has {A.shape[0]}")
    factor = cholesky_factor(A)
    return scipy.linalg.cho_solve(factor, b, check_finite=False)
