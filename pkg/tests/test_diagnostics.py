from statistics import NormalDist

import numpy as np
import pytest
from scipy.special import ndtri

from blindeq import closed_form as cf
from blindeq import diagnostics as dg
from blindeq.errors import DimensionError
from blindeq.linalg import build_channel_matrix
from blindeq.signal import ChannelSpec, simulate, snr_to_noise_variance

from oracles import direct_convolution_output


def mmse_setup(qpsk, taps, M, snr_db, n, seed):
    sb2 = snr_to_noise_variance(snr_db, qpsk, taps)
    H = build_channel_matrix(taps, M)
    R = cf.build_ryy(H, 1.0, sb2)
    nu = cf.select_delay(H, R)
    C = cf.mmse_equalizer(H, R, nu, 1.0)
    rec = simulate(qpsk, ChannelSpec(taps, sb2), n + M - 1, seed)
    return rec, H, C, nu


class TestDecomposeOutput:
    def test_reconstruction_identity(self, qpsk, ref_taps):
        rec, H, C, nu = mmse_setup(qpsk, ref_taps, 11, 15, 3000, 1)
        d = dg.decompose_output(rec, C, H, nu)
        assert d.output.size == 3000
        np.testing.assert_allclose(d.cursor + d.isi + d.noise, d.output, rtol=0, atol=1e-12)

    def test_isi_matches_loop_oracle(self, qpsk, ref_taps):
        rec, H, C, nu = mmse_setup(qpsk, ref_taps, 11, 20, 200, 2)
        d = dg.decompose_output(rec, C, H, nu)
        a = {k: rec.symbol(k) for k in range(-rec.L, len(rec))}
        for k in (0, 17, 123, 199):
            n = d.start + k
            noiseless = direct_convolution_output(C, ref_taps, a, n)
            expected = noiseless - d.gain * rec.symbol(n - nu)
            assert d.isi[k] == pytest.approx(expected, abs=1e-12)
            assert d.noise[k] == pytest.approx(np.vdot(C, rec.noise_window(n, 11)), abs=1e-12)

    def test_zero_filter(self, qpsk, ref_taps):
        rec, H, _, nu = mmse_setup(qpsk, ref_taps, 5, 20, 300, 3)
        d = dg.decompose_output(rec, np.zeros(5), H, nu)
        for arr in (d.output, d.cursor, d.isi, d.noise):
            assert not np.any(arr)

    def test_perfect_equalization(self, qpsk):
        rec = simulate(qpsk, ChannelSpec([1.0], 0.0), 500, 4)
        H = build_channel_matrix([1.0], 3)
        C = np.array([0, 1, 0], dtype=complex)
        d = dg.decompose_output(rec, C, H, 1)
        assert d.gain == 1
        np.testing.assert_array_equal(d.isi, 0)
        np.testing.assert_allclose(d.output, rec.delayed_symbols(1, 2))

    def test_shape_mismatch(self, qpsk, ref_taps):
        rec, H, _, nu = mmse_setup(qpsk, ref_taps, 5, 20, 300, 3)
        with pytest.raises(DimensionError):
            dg.decompose_output(rec, np.zeros(4), H, nu)

    def test_missing_streams(self, qpsk, ref_taps):
        rec, H, C, nu = mmse_setup(qpsk, ref_taps, 5, 20, 300, 3)
        from dataclasses import replace

        with pytest.raises(ValueError):
            dg.decompose_output(replace(rec, noise=None), C, H, nu)

    def test_isi_power(self, qpsk, ref_taps):
        rec, H, C, nu = mmse_setup(qpsk, ref_taps, 41, 20, 250_000, 5)
        d = dg.decompose_output(rec, C, H, nu)
        resp = cf.combined_response(C, H, nu)
        analytic = np.sum(np.abs(resp.residual) ** 2)
        assert np.mean(np.abs(d.isi) ** 2) == pytest.approx(analytic, rel=0.01)


class TestNormalQuantiles:
    def test_plotting_positions(self):
        q, _ = dg.normal_quantile_pairs(np.arange(200.0))
        i = np.arange(1, 201)
        np.testing.assert_allclose(q, [NormalDist().inv_cdf(p) for p in (i - 0.5) / 200], atol=1e-12)

    @pytest.mark.parametrize(
        "p, z",
        [(0.975, 1.959963984540054), (0.5, 0.0), (0.001, -3.090232306167813), (1e-7, -5.199337582192816)],
    )
    def test_inverse_cdf_table(self, p, z):
        assert ndtri(p) == pytest.approx(z, abs=1e-9)

    def test_sorted_standardized(self):
        rng = np.random.default_rng(0)
        q, x = dg.normal_quantile_pairs(rng.exponential(size=1000) * 5 + 2)
        assert np.all(np.diff(q) > 0) and np.all(np.diff(x) >= 0)
        assert abs(x.mean()) < 1e-12 and x.std() == pytest.approx(1.0)

    def test_rejects_small_or_flat(self):
        with pytest.raises(ValueError):
            dg.normal_quantile_pairs(np.arange(50.0))
        with pytest.raises(ValueError):
            dg.normal_quantile_pairs(np.ones(500))


class TestPearson:
    def test_quantiles_against_themselves(self):
        q = ndtri((np.arange(250_000) + 0.5) / 250_000)
        qq, x = dg.normal_quantile_pairs(q)
        assert dg.pearson(x, qq) == pytest.approx(1.0, abs=1e-6)

    def test_normal_sample(self):
        x = np.random.default_rng(1).standard_normal(250_000)
        q, xs = dg.normal_quantile_pairs(x)
        assert dg.pearson(xs, q) >= 0.9995
        bulk = np.abs(q) < 3
        assert np.max(np.abs(xs - q)[bulk]) < 0.05

    def test_uniform_sample_is_worse(self):
        rng = np.random.default_rng(2)
        cn = dg.pearson(*reversed(dg.normal_quantile_pairs(rng.standard_normal(10_000))))
        cu = dg.pearson(*reversed(dg.normal_quantile_pairs(rng.uniform(size=10_000))))
        assert cu < cn
        assert cu < 0.99

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            dg.pearson(np.arange(5.0), np.arange(6.0))

    def test_range(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            q, x = dg.normal_quantile_pairs(rng.standard_t(3, size=300))
            assert -1 - 1e-12 <= dg.pearson(x, q) <= 1 + 1e-12


class TestKurtosis:
    def test_gaussian(self):
        rng = np.random.default_rng(4)
        z = (rng.standard_normal(250_000) + 1j * rng.standard_normal(250_000)) / np.sqrt(2)
        assert abs(dg.empirical_kurtosis(z)) <= 0.01

    def test_qpsk(self, qpsk):
        rec = simulate(qpsk, ChannelSpec([1.0]), 1000, 5)
        assert dg.empirical_kurtosis(rec.symbols) == pytest.approx(-1.0, abs=1e-12)

    def test_formula(self):
        x = np.array([1, 2j, -3, 1 + 1j] * 30)
        p = np.abs(x) ** 2
        assert dg.empirical_kurtosis(x) == pytest.approx(np.mean(p**2) - 2 * np.mean(p) ** 2)

    def test_small_sample(self):
        with pytest.raises(ValueError):
            dg.empirical_kurtosis(np.ones(10))


class TestHistogram:
    def test_integrates_to_one(self):
        x = np.random.default_rng(6).standard_normal(5000) ** 3
        c, d, _ = dg.histogram_pdf(x, bins=37)
        width = c[1] - c[0]
        assert np.sum(d) * width == pytest.approx(1.0)

    def test_normal_input(self):
        x = np.random.default_rng(7).standard_normal(250_000)
        c, d, g = dg.histogram_pdf(x, bins=50)
        assert np.max(np.abs(d - g)) <= 0.05 * g.max()

    def test_two_point_input(self):
        x = np.tile([-1.0, 1.0], 500)
        c, d, g = dg.histogram_pdf(x, bins=20)
        assert np.max(np.abs(d - g)) > 1.0

    def test_too_few_bins(self):
        with pytest.raises(ValueError):
            dg.histogram_pdf(np.arange(100.0), bins=5)


class TestReferenceTrends:
    @pytest.mark.parametrize("snr", [15, 20])
    def test_monotone_gap_and_kurtosis(self, qpsk, ref_taps, snr):
        gaps, kurt = [], []
        for M in (11, 21, 41):
            rec, H, C, nu = mmse_setup(qpsk, ref_taps, M, snr, 250_000, 100 + M)
            resp = cf.combined_response(C, H, nu)
            gaps.append(abs(qpsk.kurtosis) * np.sum(np.abs(resp.residual) ** 4))
            d = dg.decompose_output(rec, C, H, nu)
            k_hat = dg.empirical_kurtosis(d.isi)
            # analytic kurtosis of the residual ISI
            k_true = qpsk.kurtosis * np.sum(np.abs(resp.residual) ** 4)
            assert abs(k_hat - k_true) <= 3 / np.sqrt(d.isi.size)
            kurt.append(abs(k_true))
        assert gaps[0] >= gaps[1] >= gaps[2]
        assert kurt[0] >= kurt[1] >= kurt[2]

    def test_report_fields(self, qpsk, ref_taps, tmp_path):
        rec, H, C, nu = mmse_setup(qpsk, ref_taps, 11, 20, 5000, 9)
        rep = dg.gaussianity_report(dg.decompose_output(rec, C, H, nu).isi, bins=30)
        assert rep.n == 5000 and rep.quantiles.size == 10000
        assert rep.bin_centers.size == 30
        dg.write_qq_csv(tmp_path / "qq.csv", rep)
        dg.write_pdf_csv(tmp_path / "pdf.csv", rep)
        assert (tmp_path / "qq.csv").read_text().splitlines()[0] == "q,x"
        assert len((tmp_path / "pdf.csv").read_text().splitlines()) == 31
