"""Channel impairments: AWGN, CFO, timing offset, spur, SNR estimation."""

import math

import numpy as np
import pytest

import maxminsense as mms
from maxminsense.channel import ChannelConfig, SpurSpec
from maxminsense.signals import IqBuffer

from conftest import make_noise


def _buf(n=1000, value=1.0 + 0j, rate=8.0):
    return IqBuffer(np.full(n, value, dtype=np.complex128), rate)


class TestAddAwgn:
    def test_noise_disabled_is_bit_exact(self):
        sig = _buf()
        out = mms.add_awgn(sig, ChannelConfig(snr_db=math.inf), np.random.default_rng(0))
        assert np.array_equal(out.samples, sig.samples)
        assert out.samples is not sig.samples

    def test_noise_power_matches_target(self):
        # oracle: sample-variance estimator on the injected noise alone
        sig = _buf(1_000_000)
        cfg = ChannelConfig(snr_db=0.0, noise_uncertainty_db=0.0)
        out = mms.add_awgn(sig, cfg, np.random.default_rng(1))
        noise = out.samples - sig.samples
        measured = np.mean(np.abs(noise) ** 2)
        assert measured == pytest.approx(1.0, rel=0.01)

    def test_same_seed_same_output(self):
        sig = _buf(5000)
        cfg = ChannelConfig(snr_db=-3.0, noise_uncertainty_db=1.0)
        a = mms.add_awgn(sig, cfg, np.random.default_rng(7))
        b = mms.add_awgn(sig, cfg, np.random.default_rng(7))
        assert np.array_equal(a.samples, b.samples)

    def test_noise_is_white(self):
        sig = IqBuffer(np.zeros(1_000_000, np.complex128), 8.0)
        out = mms.add_awgn(sig, ChannelConfig(snr_db=0.0), np.random.default_rng(2))
        n = out.samples
        lag0 = np.vdot(n, n).real
        for lag in range(1, 9):
            r = abs(np.vdot(n[:-lag], n[lag:]))
            assert r < 0.01 * lag0

    def test_uncertainty_scales_variance(self):
        sig = _buf(200_000)
        cfg = ChannelConfig(snr_db=0.0, noise_uncertainty_db=2.0)
        rng = np.random.default_rng(3)
        u = np.random.default_rng(3).uniform(-2.0, 2.0)  # same first draw
        out = mms.add_awgn(sig, cfg, rng)
        measured = np.mean(np.abs(out.samples - sig.samples) ** 2)
        assert measured == pytest.approx(10.0 ** (u / 10.0), rel=0.02)

    def test_empty_signal_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            mms.add_awgn(IqBuffer(np.array([], np.complex128), 1.0),
                         ChannelConfig(), np.random.default_rng(0))


class TestApplyCfo:
    def test_zero_cfo_identity(self):
        sig = _buf(100)
        out = mms.apply_cfo(sig, 0.0)
        assert np.array_equal(out.samples, sig.samples)

    def test_quarter_rate_rotation(self):
        sig = _buf(8, rate=8.0)
        out = mms.apply_cfo(sig, 2.0)  # Fs/4
        expected = np.array([1, 1j, -1, -1j, 1, 1j, -1, -1j])
        np.testing.assert_allclose(out.samples, expected, atol=1e-12)

    def test_power_preserved(self):
        sig = IqBuffer(make_noise(10_000, 11), 8.0)
        out = mms.apply_cfo(sig, 1.2345)
        np.testing.assert_allclose(np.abs(out.samples), np.abs(sig.samples), rtol=1e-12)

    def test_aliasing_rejected(self):
        with pytest.raises(ValueError, match="alias"):
            mms.apply_cfo(_buf(10, rate=8.0), 4.0)


class TestApplyTimingOffset:
    def test_zero_frac_identity_on_valid_region(self, spec02):
        sig = IqBuffer(make_noise(4000, 21), 8.0)
        out = mms.apply_timing_offset(sig, 0.0, spec02)
        valid = slice(32, -32)
        np.testing.assert_allclose(out.samples[valid], sig.samples[valid], atol=1e-6)

    def test_complementary_delays_give_one_symbol_shift(self, spec02):
        # oracle: integer-shift comparison after frac then (1 - frac)
        syms = mms.qpsk_map(np.random.default_rng(5).integers(0, 2, 1000))
        shaped, _ = mms.shape_and_upsample(syms, spec02)
        a = mms.apply_timing_offset(shaped, 0.3, spec02)
        b = mms.apply_timing_offset(a, 0.7, spec02)
        L = spec02.oversampling
        valid = slice(80, len(shaped) - 80)
        np.testing.assert_allclose(
            b.samples[valid], shaped.samples[valid.start - L : valid.stop - L], atol=1e-3
        )

    def test_tone_phase_rotation(self, spec02):
        # oracle: analytic tone evaluation under a pure delay
        f, fs = 0.7, 8.0
        m = np.arange(4000)
        tone = np.exp(2j * np.pi * f * m / fs)
        out = mms.apply_timing_offset(IqBuffer(tone, fs), 0.3, spec02)
        expected = tone * np.exp(-2j * np.pi * f * 0.3 * spec02.symbol_period_s)
        valid = slice(40, -40)
        np.testing.assert_allclose(out.samples[valid], expected[valid], atol=1e-3)

    def test_power_preserved_in_band(self, spec02):
        syms = mms.qpsk_map(np.random.default_rng(6).integers(0, 2, 4000))
        shaped, _ = mms.shape_and_upsample(syms, spec02)
        out = mms.apply_timing_offset(shaped, 0.45, spec02)
        valid = slice(200, -200)
        p_in = np.mean(np.abs(shaped.samples[valid]) ** 2)
        p_out = np.mean(np.abs(out.samples[valid]) ** 2)
        assert p_out == pytest.approx(p_in, rel=1e-3)

    def test_short_signal_rejected(self, spec02):
        with pytest.raises(ValueError, match="short"):
            mms.apply_timing_offset(_buf(64), 0.5, spec02, interp_halfwidth=32)

    def test_frac_range_validated(self, spec02):
        with pytest.raises(ValueError, match="frac"):
            mms.apply_timing_offset(_buf(), 1.0, spec02)


class TestInjectSpur:
    def test_zero_amplitude_identity(self):
        sig = _buf(1000)
        out = mms.inject_spur(sig, SpurSpec(0.0, 1.0, 0.0), np.random.default_rng(0))
        assert np.array_equal(out.samples, sig.samples)

    def test_energy_concentrated_in_band(self):
        # oracle: periodogram energy ratio
        fs = 8.0
        sig = IqBuffer(np.zeros(1 << 18, np.complex128), fs)
        spur = SpurSpec(amplitude=1.0, bandwidth_hz=fs / 16, center_hz=0.0)
        out = mms.inject_spur(sig, spur, np.random.default_rng(4))
        spectrum = np.abs(np.fft.fft(out.samples)) ** 2
        freqs = np.fft.fftfreq(out.samples.size, d=1.0 / fs)
        in_band = np.abs(freqs) <= fs / 16
        assert spectrum[in_band].sum() / spectrum.sum() >= 0.99

    def test_power_additivity(self):
        sig = IqBuffer(make_noise(1_000_000, 31), 8.0)
        spur = SpurSpec(amplitude=0.5, bandwidth_hz=0.5, center_hz=1.0)
        out = mms.inject_spur(sig, spur, np.random.default_rng(5))
        assert out.power() == pytest.approx(sig.power() + 0.25, rel=0.01)

    def test_bandwidth_bound_enforced(self):
        with pytest.raises(ValueError, match="bound"):
            mms.inject_spur(_buf(rate=8.0), SpurSpec(1.0, 1.1, 0.0),
                            np.random.default_rng(0))


class TestEstimateSnr:
    @pytest.mark.parametrize(
        "p1,p0,expected", [(2.0, 1.0, 0.0), (1.01, 1.0, -20.0), (11.0, 1.0, 10.0)]
    )
    def test_known_values(self, p1, p0, expected):
        assert mms.estimate_snr(p1, p0) == pytest.approx(expected, abs=1e-9)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            mms.estimate_snr(1.0, 0.0)
        with pytest.raises(ValueError):
            mms.estimate_snr(1.0, 2.0)


class TestChannelConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            ChannelConfig(noise_uncertainty_db=-1.0)
        with pytest.raises(ValueError):
            ChannelConfig(timing_offset_frac=1.5)
