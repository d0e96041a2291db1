"""Channel and receiver impairments: AWGN with bounded noise-variance
uncertainty, carrier frequency offset, fractional symbol-timing offset, and a
synthetic narrowband spur.

Every operation is deterministic given (input, config, random stream); random
sources are supplied per call, never global.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import oaconvolve

from .signals import IqBuffer, PulseSpec


@dataclass(frozen=True)
class SpurSpec:
    """Narrowband spur: RMS amplitude, double-sided bandwidth, center frequency."""

    amplitude: float
    bandwidth_hz: float
    center_hz: float = 0.0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("spur amplitude must be >= 0")
        if self.bandwidth_hz <= 0:
            raise ValueError("spur bandwidth must be positive")


@dataclass(frozen=True)
class ChannelConfig:
    """Impairment settings for one simulated link.

    snr_db: signal-to-noise power ratio in dB; math.inf disables noise.
    noise_uncertainty_db: half-width of the per-trial noise-variance error,
        uniform in dB over [-noise_uncertainty_db, +noise_uncertainty_db].
    cfo_hz: residual carrier frequency offset.
    timing_offset_frac: symbol-timing offset t0/P_s in [0, 1); None lets the
        Monte Carlo harness draw it uniformly per trial.
    spur: optional narrowband spur added at the receiver.
    """

    snr_db: float = math.inf
    noise_uncertainty_db: float = 0.0
    cfo_hz: float = 0.0
    timing_offset_frac: float | None = 0.0
    spur: SpurSpec | None = None

    def __post_init__(self):
        if self.noise_uncertainty_db < 0:
            raise ValueError("noise_uncertainty_db must be >= 0")
        if self.timing_offset_frac is not None and not (
            0.0 <= self.timing_offset_frac < 1.0
        ):
            raise ValueError("timing_offset_frac must lie in [0, 1)")


def complex_awgn(n: int, variance: float, rng: np.random.Generator, dtype=np.complex128):
    """Circularly-symmetric complex Gaussian samples with the given variance."""
    real_dtype = np.float32 if dtype == np.complex64 else np.float64
    w = rng.standard_normal(2 * n, dtype=real_dtype).view(
        np.complex64 if real_dtype == np.float32 else np.complex128
    )
    return w * np.sqrt(variance / 2.0).astype(real_dtype)


def add_awgn(signal: IqBuffer, cfg: ChannelConfig, rng: np.random.Generator) -> IqBuffer:
    """Add complex AWGN at cfg.snr_db relative to the measured signal power.

    The per-call noise variance is P_sig * 10^(-snr/10) * 10^(u/10) with
    u ~ Uniform[-noise_uncertainty_db, +noise_uncertainty_db] drawn once (the
    uncertainty draw happens before the noise draw). Returns a new buffer.
    """
    if len(signal) == 0:
        raise ValueError("cannot add noise to an empty signal")
    if math.isinf(cfg.snr_db) and cfg.snr_db > 0:
        return IqBuffer(signal.samples.copy(), signal.sample_rate_hz)
    u = 0.0
    if cfg.noise_uncertainty_db > 0:
        u = rng.uniform(-cfg.noise_uncertainty_db, cfg.noise_uncertainty_db)
    variance = signal.power() * 10.0 ** (-cfg.snr_db / 10.0) * 10.0 ** (u / 10.0)
    noise = complex_awgn(len(signal), variance, rng, dtype=signal.samples.dtype)
    return IqBuffer(signal.samples + noise, signal.sample_rate_hz)


def apply_cfo(signal: IqBuffer, cfo_hz: float) -> IqBuffer:
    """Rotate sample m by exp(j*2*pi*cfo_hz*m/sample_rate)."""
    if abs(cfo_hz) >= signal.sample_rate_hz / 2.0:
        raise ValueError(
            f"cfo {cfo_hz} Hz aliases at sample rate {signal.sample_rate_hz} Hz"
        )
    if cfo_hz == 0.0:
        return IqBuffer(signal.samples.copy(), signal.sample_rate_hz)
    s = signal.samples
    if s.dtype == np.complex64:
        phase = (2.0 * np.pi * cfo_hz / signal.sample_rate_hz) * np.arange(
            len(s), dtype=np.float64
        )
        rot = (np.cos(phase) + 1j * np.sin(phase)).astype(np.complex64)
    else:
        phase = (2.0 * np.pi * cfo_hz / signal.sample_rate_hz) * np.arange(len(s))
        rot = np.exp(1j * phase)
    return IqBuffer(s * rot, signal.sample_rate_hz)


def _fractional_delay_taps(delay_samples: float, halfwidth: int, dtype=np.float64):
    """Blackman-windowed sinc interpolator realizing the given sample delay.

    Tap j (j = 0..2*halfwidth) contributes x[m-j]; the kernel has group delay
    halfwidth + delay_samples.
    """
    j = np.arange(2 * halfwidth + 1, dtype=np.float64)
    x = j - halfwidth - delay_samples
    w = np.where(
        np.abs(x) <= halfwidth,
        0.42 + 0.5 * np.cos(np.pi * x / halfwidth) + 0.08 * np.cos(2 * np.pi * x / halfwidth),
        0.0,
    )
    return (np.sinc(x) * w).astype(dtype)


def apply_timing_offset(
    signal: IqBuffer,
    frac: float,
    spec: PulseSpec,
    interp_halfwidth: int = 32,
) -> IqBuffer:
    """Delay the stream by frac*P_s seconds via windowed-sinc interpolation.

    Output has the same length; the first and last interp_halfwidth samples
    are edge transients and must be excluded downstream.
    """
    if not 0.0 <= frac < 1.0:
        raise ValueError("frac must lie in [0, 1)")
    if interp_halfwidth < 1:
        raise ValueError("interp_halfwidth must be positive")
    if len(signal) <= 2 * interp_halfwidth:
        raise ValueError(
            f"signal length {len(signal)} too short for half-width {interp_halfwidth}"
        )
    delay = frac * spec.oversampling  # frac*P_s seconds at L/P_s samples/s
    s = signal.samples
    dtype = np.float32 if s.dtype == np.complex64 else np.float64
    taps = _fractional_delay_taps(delay, interp_halfwidth, dtype)
    out = oaconvolve(s, taps, mode="full")[interp_halfwidth : interp_halfwidth + len(s)]
    return IqBuffer(out, signal.sample_rate_hz)


def inject_spur(signal: IqBuffer, spur: SpurSpec, rng: np.random.Generator) -> IqBuffer:
    """Add a filtered-Gaussian narrowband spur to the stream.

    The spur occupies bandwidth_hz (double-sided) around center_hz and is
    scaled to RMS amplitude over the generated block. Bandwidth is capped at
    sample_rate/8.
    """
    fs = signal.sample_rate_hz
    if spur.bandwidth_hz > fs / 8.0:
        raise ValueError(
            f"spur bandwidth {spur.bandwidth_hz} Hz exceeds the bound {fs / 8.0} Hz"
        )
    if spur.amplitude == 0.0:
        return IqBuffer(signal.samples.copy(), fs)
    n = len(signal)
    dtype = signal.samples.dtype if np.iscomplexobj(signal.samples) else np.complex128
    raw = complex_awgn(n, 1.0, rng, dtype=dtype)
    # Lowpass to +-bandwidth/2, then mix to the center frequency.
    cutoff = spur.bandwidth_hz / 2.0 / fs  # normalized one-sided cutoff
    ntaps = int(np.ceil(5.5 / cutoff)) | 1
    k = np.arange(ntaps) - (ntaps - 1) / 2.0
    lp = 2.0 * cutoff * np.sinc(2.0 * cutoff * k) * np.blackman(ntaps)
    lp = lp.astype(np.float32 if dtype == np.complex64 else np.float64)
    nb = oaconvolve(raw, lp, mode="same")
    if spur.center_hz != 0.0:
        phase = (2.0 * np.pi * spur.center_hz / fs) * np.arange(n)
        nb = nb * np.exp(1j * phase).astype(dtype)
    rms = np.sqrt(np.mean(nb.real**2 + nb.imag**2))
    nb = nb * (spur.amplitude / rms)
    return IqBuffer(signal.samples + nb.astype(dtype), fs)


def estimate_snr(power_h1: float, power_h0: float) -> float:
    """SNR in dB from average received powers under H1 and H0."""
    if power_h0 <= 0:
        raise ValueError("power_h0 must be positive")
    if power_h1 <= power_h0:
        raise ValueError("power_h1 must exceed power_h0")
    return 10.0 * math.log10((power_h1 - power_h0) / power_h0)
