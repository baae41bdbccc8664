"""Closed-form finite-length constant modulus equalization.

Modules
-------
linalg
    Toeplitz channel matrix, Cholesky solves, inner products.
signal
    Alphabets, channel model, seeded simulation.
closed_form
    Closed-form CM and MMSE equalizers, output moments, CM cost.
adaptive
    LMS, CMA, power tracker, blind gain and phase loop.
diagnostics
    Residual ISI extraction and Gaussianity measures.
harness
    Experiment configuration and reproduction runs.
"""

from ._backend import BACKEND
from .closed_form import (
    ClosedFormSolution,
    CombinedResponse,
    MomentReport,
    alpha_magnitude,
    build_ryy,
    cm_equalizer,
    cm_mmse_relation_factor,
    combined_response,
    exact_moments,
    misalignment,
    mmse_equalizer,
    omega,
    select_delay,
)
from .linalg import ChannelMatrix, build_channel_matrix, hermitian_solve, inner
from .signal import (
    REFERENCE_CHANNEL,
    ChannelSpec,
    SimulationRecord,
    SymbolAlphabet,
    qam_alphabet,
    qpsk_alphabet,
    simulate,
    snr_to_noise_variance,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "REFERENCE_CHANNEL",
    "ChannelMatrix",
    "ChannelSpec",
    "ClosedFormSolution",
    "CombinedResponse",
    "MomentReport",
    "SimulationRecord",
    "SymbolAlphabet",
    "alpha_magnitude",
    "build_channel_matrix",
    "build_ryy",
    "cm_equalizer",
    "cm_mmse_relation_factor",
    "combined_response",
    "exact_moments",
    "hermitian_solve",
    "inner",
    "misalignment",
    "mmse_equalizer",
    "omega",
    "qam_alphabet",
    "qpsk_alphabet",
    "select_delay",
    "simulate",
    "snr_to_noise_variance",
]
