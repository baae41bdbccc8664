"""Symbol alphabets, channel model and seeded transmission simulation."""

import csv
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import AlphabetError
from .linalg import as_complex_vector

#: Tap set of the five-tap real test channel used throughout the experiments.
REFERENCE_CHANNEL = (0.5679, -0.1136, 0.5849, 0.1124, 0.556)

# spawn keys of the independent random streams inside one simulation
SYMBOL_STREAM = 0
NOISE_STREAM = 1


def derive_seed(seed, *key):
    """Deterministically derive a 64-bit seed from ``seed`` and an integer key.

    Uses ``numpy.random.SeedSequence`` with ``key`` as the spawn key, so
    streams for different keys are statistically independent and adding a
    new key never changes the values produced for existing ones.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _rng(seed, stream):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(stream,))))


@dataclass(frozen=True, eq=False)
class SymbolAlphabet:
    """Equiprobable complex constellation with its moment constants.

    Parameters
    ----------
    points : array_like
        Constellation points, all equally likely.
    name : str
        Label used in reports.
    """

    points: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        pts = as_complex_vector(self.points, "constellation")
        if pts.size < 2:
            raise AlphabetError("constellation needs at least two points")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        scale = np.sqrt(np.mean(np.abs(pts) ** 2))
        if abs(np.mean(pts)) > 1e-12 * scale:
            raise AlphabetError("constellation must have zero mean")
        if abs(np.mean(pts**2)) > 1e-12 * scale**2:
            raise AlphabetError("only circular constellations (E{a^2} = 0) are supported")
        if self.kurtosis >= 0:
            raise AlphabetError(f"constellation is not sub-Gaussian (K(a) = {self.kurtosis:g})")

    @cached_property
    def variance(self):
        """Symbol power E|a|^2."""
        return float(np.mean(np.abs(self.points) ** 2))

    @cached_property
    def fourth_moment(self):
        return float(np.mean(np.abs(self.points) ** 4))

    @cached_property
    def kurtosis(self):
        """Circular complex kurtosis E|a|^4 - 2(E|a|^2)^2 - |E a^2|^2."""
        pts = self.points
        m2 = np.mean(np.abs(pts) ** 2)
        return float(np.mean(np.abs(pts) ** 4) - 2 * m2**2 - abs(np.mean(pts**2)) ** 2)

    @cached_property
    def dispersion(self):
        """Godard dispersion constant R2 = E|a|^4 / E|a|^2."""
        return self.fourth_moment / self.variance

    def decide(self, z):
        """Nearest-point hard decisions for scalar or array ``z``."""
        z = np.asarray(z)
        idx = np.argmin(np.abs(z[..., None] - self.points), axis=-1)
        return self.points[idx]


def qpsk_alphabet():
    """Unit-power 4PSK: points (+-1 +- 1j)/sqrt(2); K(a) = -1, R2 = 1."""
    pts = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) / np.sqrt(2)
    return SymbolAlphabet(pts, name="qpsk")


def qam_alphabet(order):
    """Unit-power square QAM with ``order`` points (4, 16, 64, ...)."""
    side = int(round(np.sqrt(order)))
    if side * side != order or side < 2 or side % 2:
        raise AlphabetError(f"square QAM order expected, got {order}")
    levels = np.arange(-(side - 1), side, 2, dtype=float)
    pts = (levels[:, None] + 1j * levels[None, :]).ravel()
    pts /= np.sqrt(np.mean(np.abs(pts) ** 2))
    return SymbolAlphabet(pts, name=f"{order}qam")


@dataclass(frozen=True, eq=False)
class ChannelSpec:
    """FIR channel taps ``h_0..h_L`` plus white circular noise variance."""

    taps: np.ndarray
    noise_var: float = 0.0

    def __post_init__(self):
        taps = as_complex_vector(self.taps, "channel taps")
        if taps.size == 0 or not np.any(taps != 0):
            raise ValueError("channel needs at least one nonzero tap")
        if not np.isfinite(self.noise_var) or self.noise_var < 0:
            raise ValueError(f"noise variance must be >= 0, got {self.noise_var}")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)
        object.__setattr__(self, "noise_var", float(self.noise_var))

    @property
    def L(self):
        return self.taps.size - 1

    @property
    def energy(self):
        return float(np.sum(np.abs(self.taps) ** 2))


def snr_to_noise_variance(snr_db, alphabet, h):
    """Noise variance giving SNR = sigma_a^2 ||h||^2 / sigma_b^2 (in dB)."""
    if not np.isfinite(snr_db):
        raise ValueError(f"SNR must be finite, got {snr_db}")
    energy = float(np.sum(np.abs(np.asarray(h, dtype=np.complex128)) ** 2))
    return alphabet.variance * energy * 10.0 ** (-snr_db / 10.0)


@dataclass(frozen=True, eq=False)
class SimulationRecord:
    """One seeded transmission through an FIR channel.

    ``symbols`` holds ``L`` warm-up symbols followed by the ``n`` symbols
    aligned with the received samples, i.e. the symbol transmitted at time
    ``k`` (``-L <= k < n``) sits at ``symbols[k + L]``. ``noise`` and
    ``received`` both have length ``n``.
    """

    seed: int
    taps: np.ndarray
    noise_var: float
    symbols: np.ndarray
    noise: np.ndarray
    received: np.ndarray
    alphabet: SymbolAlphabet = field(repr=False, default=None)

    @property
    def L(self):
        return self.taps.size - 1

    def __len__(self):
        return self.received.size

    def symbol(self, k):
        """Symbol ``a_k`` (``k`` may be as small as ``-L``)."""
        return self.symbols[k + self.L]

    def delayed_symbols(self, nu, start, stop=None):
        """``a_{n-nu}`` for ``n`` in ``[start, stop)``."""
        stop = len(self) if stop is None else stop
        lo = start - nu + self.L
        if lo < 0:
            raise IndexError(f"symbol a_{start - nu} precedes the recorded warm-up")
        return self.symbols[lo : stop - nu + self.L]

    def window(self, n, M):
        """Received vector ``Y_n = [y_n, y_{n-1}, ..., y_{n-M+1}]``."""
        if n - M + 1 < 0 or n >= len(self):
            raise IndexError(f"window of length {M} ending at {n} is out of range")
        return self.received[n - M + 1 : n + 1][::-1]

    def noise_window(self, n, M):
        if n - M + 1 < 0 or n >= len(self):
            raise IndexError(f"window of length {M} ending at {n} is out of range")
        return self.noise[n - M + 1 : n + 1][::-1]

    def symbol_block(self, n, M):
        """``A_n = [a_n, ..., a_{n-(M+L-1)}]`` matching ``window(n, M)``."""
        width = M + self.L
        lo = n - width + 1 + self.L
        if lo < 0 or n >= len(self):
            raise IndexError(f"symbol block for n={n}, M={M} is out of range")
        return self.symbols[lo : n + self.L + 1][::-1]

    def to_csv(self, path):
        """Write ``index, a_re, a_im, b_re, b_im, y_re, y_im`` rows (time index ``k >= 0``)."""
        a = self.symbols[self.L :]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "a_re", "a_im", "b_re", "b_im", "y_re", "y_im"])
            for k in range(len(self)):
                w.writerow(
                    [k]
                    + [f"{v:.16e}" for v in (a[k].real, a[k].imag, self.noise[k].real,
                                              self.noise[k].imag, self.received[k].real,
                                              self.received[k].imag)]
                )


def simulate(alphabet, channel, n, seed):
    """Transmit ``n`` i.i.d. uniform symbols through ``channel`` with AWGN.

    ``L`` extra warm-up symbols are drawn before the first output so every
    received sample sees a full channel memory. Symbols and noise come from
    independent streams derived from ``seed``; equal seeds give bit-identical
    records.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"number of samples must be >= 1, got {n}")
    n = int(n)
    L = channel.L
    sym_rng = _rng(seed, SYMBOL_STREAM)
    idx = sym_rng.integers(0, alphabet.points.size, size=n + L)
    a = alphabet.points[idx]

    if channel.noise_var > 0:
        noise_rng = _rng(seed, NOISE_STREAM)
        std = np.sqrt(channel.noise_var / 2.0)
        b = std * (noise_rng.standard_normal(n) + 1j * noise_rng.standard_normal(n))
    else:
        b = np.zeros(n, dtype=np.complex128)

    y = np.convolve(a, channel.taps)[L : L + n] + b
    for arr in (a, b, y):
        arr.setflags(write=False)
    return SimulationRecord(
        seed=int(seed),
        taps=channel.taps,
        noise_var=channel.noise_var,
        symbols=a,
        noise=b,
        received=y,
        alphabet=alphabet,
    )
