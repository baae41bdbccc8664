"""End-to-end experiments driven by an ``ExperimentConfig``.

Every cell of an (M, SNR) grid gets its own seed, derived from the config
seed, an experiment component id and the cell coordinates, so cells are
reproducible on their own and can run in any order or in parallel.
"""

import csv
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .. import adaptive, closed_form, diagnostics
from ..linalg import build_channel_matrix
from ..signal import ChannelSpec, derive_seed, qpsk_alphabet, simulate, snr_to_noise_variance

log = logging.getLogger(__name__)

# component ids mixed into cell seeds
GAUSSIANITY = 1
COMPARE = 2
SWEEP = 3


def fmt(v):
    """Full-precision CSV field."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.16e}"
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def cell_seed(seed, component, M, snr_db):
    snr_key = int(round(snr_db * 1000)) % 2**32
    return derive_seed(seed, component, M, snr_key)


def cell_dir(out, M, snr_db):
    path = os.path.join(out, f"M{M}_snr{snr_db:g}")
    os.makedirs(path, exist_ok=True)
    return path


@dataclass
class Setup:
    """Channel, noise level and second-order statistics for one grid cell."""

    alphabet: object
    taps: np.ndarray
    M: int
    snr_db: float
    noise_var: float
    H: object
    R: np.ndarray

    @classmethod
    def build(cls, taps, M, snr_db, alphabet=None):
        alphabet = alphabet or qpsk_alphabet()
        taps = np.asarray(taps, dtype=np.complex128)
        sb2 = snr_to_noise_variance(snr_db, alphabet, taps)
        H = build_channel_matrix(taps, M)
        R = closed_form.build_ryy(H, alphabet.variance, sb2)
        return cls(alphabet, taps, M, float(snr_db), sb2, H, R)

    def delay(self, nu="auto"):
        return closed_form.select_delay(self.H, self.R) if nu == "auto" else int(nu)

    def simulate(self, n, seed):
        return simulate(self.alphabet, ChannelSpec(self.taps, self.noise_var), n, seed)


def _grid(cfg):
    return [(M, snr) for M in cfg.M for snr in cfg.snr_db]


def _map(fn, args, jobs):
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, args))
    return [fn(a) for a in args]


# --- closed-form tables -------------------------------------------------------

THEORY_HEADER = ["nu", "omega", "alpha_mag", "predicted_power", "mmse", "gaussian_gap",
                 "surrogate_bound", "selected"]


def closed_form_rows(setup, nu="auto"):
    rows = closed_form.delay_table(setup.H, setup.R, setup.alphabet, setup.noise_var)
    selected = setup.delay(nu)
    return [
        (r.nu, r.omega, r.alpha_mag, r.predicted_power, r.mmse, r.gaussian_gap,
         r.surrogate_bound, r.nu == selected)
        for r in rows
    ]


def _closed_form_cell(args):
    cfg, M, snr = args
    setup = Setup.build(cfg.taps, M, snr)
    rows = closed_form_rows(setup, cfg.nu)
    write_csv(os.path.join(cell_dir(cfg.out, M, snr), "theory.csv"), THEORY_HEADER, rows)
    nu = setup.delay(cfg.nu)
    sol = closed_form.cm_equalizer(setup.H, setup.R, nu, setup.alphabet, cfg.theta)
    c_mmse = closed_form.mmse_equalizer(setup.H, setup.R, nu, setup.alphabet.variance)
    resp = closed_form.combined_response(sol.taps, setup.H, nu)
    mom = closed_form.exact_moments(resp, sol.taps, setup.alphabet, setup.noise_var)
    return (M, snr, nu, sol.omega, sol.alpha_mag, sol.predicted_power,
            closed_form.misalignment(sol.taps, c_mmse), mom.gaussian_gap)


CLOSED_FORM_SUMMARY = ["M", "snr_db", "nu", "omega", "alpha_mag", "predicted_power",
                       "misalignment_cm_mmse", "gaussian_gap"]


def run_closed_form_report(cfg):
    """Per-delay theory tables for every grid cell plus a summary at the selected delay."""
    cfg.validate()
    os.makedirs(cfg.out, exist_ok=True)
    rows = _map(_closed_form_cell, [(cfg, M, s) for M, s in _grid(cfg)], cfg.jobs)
    write_csv(os.path.join(cfg.out, "closed_form_summary.csv"), CLOSED_FORM_SUMMARY, rows)
    return [dict(zip(CLOSED_FORM_SUMMARY, r)) for r in rows]


# --- Gaussianity of the residual ISI --------------------------------------------

SUMMARY_HEADER = ["M", "snr_db", "pearson", "kurtosis", "N", "seed"]


def gaussianity_cell(taps, M, snr_db, n_symbols, seed, nu="auto", bins=50):
    """MMSE residual ISI statistics for one cell.

    Simulates ``n_symbols + M - 1`` samples so the residual has exactly
    ``n_symbols`` entries. Returns ``(setup, nu, decomposition, report)``.
    """
    setup = Setup.build(taps, M, snr_db)
    nu = setup.delay(nu)
    C = closed_form.mmse_equalizer(setup.H, setup.R, nu, setup.alphabet.variance)
    record = setup.simulate(n_symbols + M - 1, seed)
    dec = diagnostics.decompose_output(record, C, setup.H, nu)
    report = diagnostics.gaussianity_report(dec.isi, bins=bins)
    return setup, nu, dec, report


def _gaussianity_cell(args):
    cfg, M, snr = args
    seed = cell_seed(cfg.seed, GAUSSIANITY, M, snr)
    _, _, _, report = gaussianity_cell(cfg.taps, M, snr, cfg.n_symbols, seed, cfg.nu, cfg.bins)
    d = cell_dir(cfg.out, M, snr)
    diagnostics.write_qq_csv(os.path.join(d, "qq_plot.csv"), report)
    diagnostics.write_pdf_csv(os.path.join(d, "pdf.csv"), report)
    log.info("M=%d snr=%g: pearson=%.5f kurtosis=%.5f", M, snr, report.pearson, report.kurtosis)
    return (M, snr, report.pearson, report.kurtosis, report.n, seed)


def run_gaussianity(cfg):
    """Normal-probability-plot and pdf data for every (M, SNR) cell."""
    cfg.validate()
    os.makedirs(cfg.out, exist_ok=True)
    rows = _map(_gaussianity_cell, [(cfg, M, s) for M, s in _grid(cfg)], cfg.jobs)
    write_csv(os.path.join(cfg.out, "summary.csv"), SUMMARY_HEADER, rows)
    return [dict(zip(SUMMARY_HEADER, r)) for r in rows]


# --- LMS vs blind receiver ------------------------------------------------------

@dataclass
class Comparison:
    snr_db: float
    nu: int
    lms: adaptive.AdaptiveRun
    blind: adaptive.BlindRun
    mmse: np.ndarray
    aligned_blind: np.ndarray
    factor: complex
    misalignment: float
    misalignment_blind_mmse: float
    misalignment_lms_mmse: float
    seed: int


def compare_cell(taps, M, snr_db, n_symbols, seed, mu, lam=adaptive.DEFAULT_LAMBDA,
                 kp=adaptive.DEFAULT_KP, ki=adaptive.DEFAULT_KI, nu="auto",
                 snapshot_every=None):
    """Run the blind receiver and a trained LMS on the same seeded stream.

    The LMS delay is the one the blind receiver converged to (estimated from
    its output against the known symbols) unless ``nu`` is given.
    """
    setup = Setup.build(taps, M, snr_db)
    record = setup.simulate(n_symbols + M - 1, seed)
    blind = adaptive.blind_receiver_run(record, M, mu, setup.alphabet, lam=lam, kp=kp, ki=ki,
                                        snapshot_every=snapshot_every)
    if nu == "auto":
        tail = min(len(blind.outputs), max(10 * M, len(blind.outputs) // 10))
        off = len(blind.outputs) - tail
        nu = adaptive.estimate_delay(blind.outputs[off:], record, blind.start + off,
                                     setup.H.n_cols - 1)
    lms = adaptive.run_lms(record, M, mu, nu, snapshot_every=snapshot_every)
    mmse = closed_form.mmse_equalizer(setup.H, setup.R, nu, setup.alphabet.variance)
    factor, aligned = adaptive.align(lms.taps, blind.effective_taps)
    return Comparison(
        snr_db=float(snr_db),
        nu=int(nu),
        lms=lms,
        blind=blind,
        mmse=mmse,
        aligned_blind=aligned,
        factor=factor,
        misalignment=closed_form.misalignment(lms.taps, blind.effective_taps),
        misalignment_blind_mmse=closed_form.misalignment(blind.taps, mmse),
        misalignment_lms_mmse=closed_form.misalignment(lms.taps, mmse),
        seed=seed,
    )


COMPARE_SUMMARY = ["snr_db", "M", "nu", "misalignment_blind_lms", "misalignment_blind_mmse",
                   "misalignment_lms_mmse", "factor_re", "factor_im", "gain", "phase",
                   "alpha_hat", "n_symbols", "seed"]
TAPS_HEADER = ["tap", "lms_re", "lms_im", "blind_re", "blind_im", "mmse_re", "mmse_im"]


def _compare_cell(args):
    cfg, M, snr = args
    seed = cell_seed(cfg.seed, COMPARE, M, snr)
    every = max(1, cfg.n_symbols // 100)
    c = compare_cell(cfg.taps, M, snr, cfg.n_symbols, seed, cfg.mu, cfg.lam, cfg.kp, cfg.ki,
                     cfg.nu, snapshot_every=every)
    d = cell_dir(cfg.out, M, snr)
    write_csv(
        os.path.join(d, "taps.csv"),
        TAPS_HEADER,
        [(i, a.real, a.imag, b.real, b.imag, m.real, m.imag)
         for i, (a, b, m) in enumerate(zip(c.lms.taps, c.aligned_blind, c.mmse))],
    )
    adaptive.write_trajectory_csv(os.path.join(d, "lms_trajectory.csv"), c.lms.trajectory)
    adaptive.write_trajectory_csv(os.path.join(d, "cma_trajectory.csv"), c.blind.trajectory)
    log.info("M=%d snr=%g nu=%d: misalignment blind/lms %.3e", M, snr, c.nu, c.misalignment)
    return (snr, M, c.nu, c.misalignment, c.misalignment_blind_mmse, c.misalignment_lms_mmse,
            c.factor.real, c.factor.imag, c.blind.final_gain, c.blind.final_phase,
            c.blind.alpha_mag, cfg.n_symbols, seed)


def run_comparison(cfg):
    """LMS vs blind receiver tap comparison for every (M, SNR) cell."""
    cfg.validate()
    os.makedirs(cfg.out, exist_ok=True)
    rows = _map(_compare_cell, [(cfg, M, s) for M, s in _grid(cfg)], cfg.jobs)
    write_csv(os.path.join(cfg.out, "compare_summary.csv"), COMPARE_SUMMARY, rows)
    return [dict(zip(COMPARE_SUMMARY, r)) for r in rows]


# --- generic sweep ----------------------------------------------------------------

SWEEP_HEADER = ["M", "snr_db", "algorithm", "nu", "misalignment_vs_mmse", "seed"]


def _sweep_adaptive_cell(args):
    cfg, M, snr = args
    setup = Setup.build(cfg.taps, M, snr)
    seed = cell_seed(cfg.seed, SWEEP, M, snr)
    record = setup.simulate(cfg.n_symbols + M - 1, seed)
    if cfg.algorithm == "lms":
        nu = setup.delay(cfg.nu)
        run = adaptive.run_lms(record, M, cfg.mu, nu)
    else:
        run = adaptive.run_cma(record, M, cfg.mu, setup.alphabet.dispersion)
        if cfg.nu == "auto":
            tail = min(len(run.outputs), max(10 * M, len(run.outputs) // 10))
            off = len(run.outputs) - tail
            nu = adaptive.estimate_delay(run.outputs[off:], record, run.start + off,
                                         setup.H.n_cols - 1)
        else:
            nu = int(cfg.nu)
    mmse = closed_form.mmse_equalizer(setup.H, setup.R, nu, setup.alphabet.variance)
    return (M, snr, cfg.algorithm, nu, closed_form.misalignment(run.taps, mmse), seed)


def run_sweep(cfg):
    """Grid sweep of the configured ``algorithm``; one summary row per cell."""
    cfg.validate()
    if cfg.algorithm == "closed_form":
        return run_closed_form_report(cfg)
    if cfg.algorithm == "diagnostics":
        return run_gaussianity(cfg)
    os.makedirs(cfg.out, exist_ok=True)
    rows = _map(_sweep_adaptive_cell, [(cfg, M, s) for M, s in _grid(cfg)], cfg.jobs)
    write_csv(os.path.join(cfg.out, "sweep_summary.csv"), SWEEP_HEADER, rows)
    return [dict(zip(SWEEP_HEADER, r)) for r in rows]
