"""Gaussianity diagnostics for the residual intersymbol interference.

Complex residuals are handled by pooling their real and imaginary parts,
each standardized on its own, into one real sample of size ``2N`` for the
normal probability plot, the Pearson coefficient and the histogram. The
kurtosis uses the complex circular formula directly.
"""

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .closed_form import combined_response
from .errors import DimensionError
from .linalg import ChannelMatrix

MIN_SAMPLES = 100


@dataclass(frozen=True, eq=False)
class ResidualDecomposition:
    """Per-sample split ``z_n = s_nu a_{n-nu} + isi_n + noise_n``.

    Arrays are indexed by ``k`` for time ``n = start + k``.
    """

    output: np.ndarray
    cursor: np.ndarray
    isi: np.ndarray
    noise: np.ndarray
    start: int
    gain: complex


@dataclass(frozen=True, eq=False)
class GaussianityReport:
    pearson: float
    kurtosis: float
    quantiles: np.ndarray
    ordered: np.ndarray
    bin_centers: np.ndarray
    density: np.ndarray
    normal_density: np.ndarray
    n: int


def _fir(x, C, start):
    # sum_k conj(c_k) x_{n-k} for n = start .. len(x)-1
    full = np.convolve(x, np.conj(C))
    return full[start : len(x)]


def decompose_output(record, C, H, nu):
    """Split the equalizer output into cursor, residual ISI and filtered noise."""
    if record.symbols is None or record.noise is None:
        raise ValueError("record lacks the symbol or noise streams needed for decomposition")
    C = np.asarray(C, dtype=np.complex128)
    A = H.matrix if isinstance(H, ChannelMatrix) else np.asarray(H)
    M = C.shape[0]
    if A.shape[0] != M:
        raise DimensionError(f"{M} taps against a channel matrix with {A.shape[0]} rows")
    if len(record) < M:
        raise ValueError(f"record has {len(record)} samples, fewer than M = {M}")
    start = M - 1
    z = _fir(record.received, C, start)
    w = _fir(record.noise, C, start)
    gain = combined_response(C, A, nu).cursor
    cursor = gain * record.delayed_symbols(nu, start)
    isi = z - cursor - w
    return ResidualDecomposition(output=z, cursor=cursor, isi=isi, noise=w, start=start, gain=gain)


def _standardize(x):
    x = np.asarray(x, dtype=float)
    sd = x.std()
    if not sd > 0:
        raise ValueError("samples have zero variance")
    return (x - x.mean()) / sd


def pool_complex(samples):
    """Real and imaginary parts, each standardized, concatenated."""
    z = np.asarray(samples)
    if np.iscomplexobj(z):
        return np.concatenate([_standardize(z.real), _standardize(z.imag)])
    return _standardize(z)


def normal_quantile_pairs(samples):
    """Normal probability plot coordinates.

    Returns ``(q, x)`` with ``x`` the standardized samples in ascending order
    and ``q[i] = Phi^{-1}((i + 0.5) / N)`` (0-based ``i``).
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or x.size < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {x.size}")
    x = np.sort(_standardize(x))
    n = x.size
    q = ndtri((np.arange(n) + 0.5) / n)
    return q, x


def pearson(x, q):
    """Pearson correlation ``(1/N) sum x_i q_i`` of standardized sequences."""
    x = np.asarray(x, dtype=float)
    q = np.asarray(q, dtype=float)
    if x.shape != q.shape:
        raise DimensionError(f"length mismatch: {x.shape} vs {q.shape}")
    return float(np.mean(_standardize(x) * _standardize(q)))


def empirical_kurtosis(samples):
    """``mean|x|^4 - 2 (mean|x|^2)^2``: zero for circular Gaussian, -1 for unit QPSK."""
    x = np.asarray(samples)
    if x.size < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {x.size}")
    p = x.real**2 + x.imag**2 if np.iscomplexobj(x) else x**2
    return float(np.mean(p**2) - 2.0 * np.mean(p) ** 2)


def histogram_pdf(samples, bins=50):
    """Density histogram of standardized samples next to the N(0, 1) density.

    Returns ``(bin_centers, density, normal_density)``; ``density`` integrates
    to one over the bins.
    """
    if bins < 10:
        raise ValueError(f"need at least 10 bins, got {bins}")
    x = _standardize(samples)
    density, edges = np.histogram(x, bins=bins, density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    normal = np.exp(-0.5 * centers**2) / np.sqrt(2 * np.pi)
    return centers, density, normal


def gaussianity_report(residual, bins=50):
    """All Gaussianity measures for a (complex) residual stream."""
    pooled = pool_complex(residual)
    q, x = normal_quantile_pairs(pooled)
    centers, density, normal = histogram_pdf(pooled, bins)
    return GaussianityReport(
        pearson=pearson(x, q),
        kurtosis=empirical_kurtosis(residual),
        quantiles=q,
        ordered=x,
        bin_centers=centers,
        density=density,
        normal_density=normal,
        n=int(np.asarray(residual).size),
    )


def write_qq_csv(path, report):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["q", "x"])
        w.writerows((f"{q:.16e}", f"{x:.16e}") for q, x in zip(report.quantiles, report.ordered))


def write_pdf_csv(path, report):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_center", "empirical", "normal"])
        for c, d, g in zip(report.bin_centers, report.density, report.normal_density):
            w.writerow([f"{c:.16e}", f"{d:.16e}", f"{g:.16e}"])
