"""Detector runtime: spur pre-shift, matched filtering, linear combining,
branch power-ratio test statistics, thresholding, and the energy-detector
baseline.

All operations are pure; a SensingResult depends only on (signal, config,
seed), so trials parallelize freely.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import as_strided
from scipy.signal import oaconvolve

from .design import CombinerWeights
from .signals import IqBuffer, PulseSpec, srrc_taps

MODES = ("synchronous", "async_no_est", "async_est")

_SPUR_SHIFT_CYCLE = np.array([1.0, -1.0j, -1.0, 1.0j])


@dataclass(frozen=True)
class DetectorConfig:
    """Detection settings: combiner weights, window size, mode, threshold."""

    weights: CombinerWeights
    n_symbols: int
    mode: str = "async_est"
    threshold: float = 0.0

    def __post_init__(self):
        if self.n_symbols < 64:
            raise ValueError(
                f"n_symbols must be >= 64 for the asymptotic statistic, got {self.n_symbols}"
            )
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass
class SensingResult:
    """Outcome of one sensing window."""

    t_values: np.ndarray
    t_max: float
    chosen_branch: int
    statistic_used: float
    threshold: float
    decision: str
    mode: str

    def format_record(self, window: int) -> str:
        """One structured text record, fixed field order."""
        tv = ",".join(repr(float(t)) for t in self.t_values)
        return (
            f"window={window} mode={self.mode} branch={self.chosen_branch} "
            f"statistic={self.statistic_used!r} threshold={self.threshold!r} "
            f"decision={self.decision} t_max={self.t_max!r} t_values={tv}"
        )


def preprocess_spur_shift(signal: IqBuffer) -> IqBuffer:
    """Rotate sample m by exp(-j*pi*m/2), shifting the spectrum by -Fs/4.

    Moves low-frequency receiver spurs (width <= Fs/8) out of the examined
    band. The rotation cycle {1, -j, -1, +j} is applied exactly.
    """
    s = signal.samples
    cycle = _SPUR_SHIFT_CYCLE.astype(s.dtype)
    return IqBuffer(s * cycle[np.arange(s.size) & 3], signal.sample_rate_hz)


def matched_filter(signal: IqBuffer, spec: PulseSpec):
    """Convolve with the unit-energy SRRC receive filter.

    Returns (IqBuffer of the full convolution, group_delay_samples). Output
    samples before index 2*group_delay are edge transients of the full
    convolution. Single-precision input stays single precision.
    """
    if abs(signal.sample_rate_hz - spec.sample_rate_hz) > 1e-6 * spec.sample_rate_hz:
        raise ValueError(
            f"signal rate {signal.sample_rate_hz} Hz does not match the "
            f"pulse rate {spec.sample_rate_hz} Hz"
        )
    taps = srrc_taps(spec)
    s = signal.samples
    if s.dtype == np.complex64:
        taps = taps.astype(np.float32)
    return (
        IqBuffer(oaconvolve(s, taps, mode="full"), signal.sample_rate_hz),
        spec.span_symbols * spec.oversampling,
    )


def combine(filtered: IqBuffer, alpha: np.ndarray, phase_offset: int, n_symbols: int) -> np.ndarray:
    """Linearly combine the L intra-symbol samples at one candidate phase.

    y[n] = sum_i alpha[i] * filtered[(n-1)*L + phase_offset + i], n = 1..N.
    """
    alpha = np.asarray(alpha)
    arr = filtered.samples if isinstance(filtered, IqBuffer) else np.asarray(filtered)
    L = alpha.size
    if not 0 <= phase_offset < L:
        raise ValueError(f"phase_offset must lie in [0, {L}), got {phase_offset}")
    need = (n_symbols - 1) * L + phase_offset + L
    if arr.size < need:
        raise ValueError(
            f"need {need} filtered samples for {n_symbols} symbols at phase "
            f"{phase_offset}, got {arr.size}"
        )
    base = arr[phase_offset : phase_offset + (n_symbols - 1) * L + L]
    windows = as_strided(
        base, shape=(n_symbols, L), strides=(base.strides[0] * L, base.strides[0])
    )
    return windows @ alpha.astype(arr.dtype, copy=False)


def _phase_kernel(weights: CombinerWeights, dtype) -> np.ndarray:
    """Stacked combining kernel evaluating both branches at all L phases.

    Column 2*p holds alpha_max placed at offset p, column 2*p + 1 alpha_min,
    so that (windows @ kernel)[n, 2*p + b] is branch b of phase p at symbol n.
    """
    L = weights.oversampling
    k = np.zeros((2 * L, 2 * L), dtype=dtype)
    for p in range(L):
        k[p : p + L, 2 * p] = weights.alpha_max.astype(dtype)
        k[p : p + L, 2 * p + 1] = weights.alpha_min.astype(dtype)
    return k


def window_length(weights: CombinerWeights, n_symbols: int) -> int:
    """Aligned filtered samples consumed by one sensing window: (N+1)*L."""
    return (n_symbols + 1) * weights.oversampling


def phase_statistics(aligned, weights: CombinerWeights, n_symbols: int) -> np.ndarray:
    """Test statistic T at every candidate sampling phase of one window.

    The window mean is removed before combining (zero-mean assumption), both
    branches are evaluated for every phase offset in one pass, and
    T_p = sqrt(N) * (mean|z_p|^2 / mean|e_p|^2 - 1) is returned as a length-L
    vector. Branch power sums are accumulated in double precision.
    """
    arr = aligned.samples if isinstance(aligned, IqBuffer) else np.asarray(aligned)
    L = weights.oversampling
    need = window_length(weights, n_symbols)
    if arr.size < need:
        raise ValueError(
            f"need {need} aligned samples for {n_symbols} symbols, got {arr.size}"
        )
    w = arr[:need]
    w = w - w.mean()
    windows = as_strided(
        w, shape=(n_symbols, 2 * L), strides=(w.strides[0] * L, w.strides[0])
    )
    y = windows @ _phase_kernel(weights, w.dtype)
    # Square in the working precision, accumulate the sums in double.
    p = (y.real * y.real + y.imag * y.imag).sum(axis=0, dtype=np.float64)
    m_z = p[0::2] / n_symbols
    m_e = p[1::2] / n_symbols
    if np.any(m_e == 0.0):
        raise ValueError("degenerate input: min-branch power is identically zero")
    return np.sqrt(n_symbols) * (m_z / m_e - 1.0)


def test_statistic(
    filtered: IqBuffer, weights: CombinerWeights, phase_offset: int, n_symbols: int
) -> float:
    """Power-ratio statistic T = sqrt(N)*(mean|z|^2/mean|e|^2 - 1) at one phase.

    z and e are the max-SNR and min-SNR combined branches; the window mean is
    removed before combining. Scale-invariant: T(c*x) = T(x) for any c != 0.
    """
    arr = filtered.samples if isinstance(filtered, IqBuffer) else np.asarray(filtered)
    L = weights.oversampling
    need = window_length(weights, n_symbols)
    if arr.size < need:
        raise ValueError(
            f"need {need} filtered samples for {n_symbols} symbols, got {arr.size}"
        )
    w = arr[:need]
    w = w - w.mean()
    z = combine(w, weights.alpha_max, phase_offset, n_symbols)
    e = combine(w, weights.alpha_min, phase_offset, n_symbols)
    m_z = float(np.mean(z.real**2 + z.imag**2))
    m_e = float(np.mean(e.real**2 + e.imag**2))
    if m_e == 0.0:
        raise ValueError("degenerate input: min-branch power is identically zero")
    return float(np.sqrt(n_symbols) * (m_z / m_e - 1.0))


def sense(
    signal: IqBuffer,
    cfg: DetectorConfig,
    spec: PulseSpec,
    rng: np.random.Generator | None = None,
) -> SensingResult:
    """Run one detection window on a received stream.

    The stream is matched filtered, the statistic is computed at all L
    candidate phases starting from the first fully-supported filter output,
    and the mode picks the branch: synchronous uses phase 0 (caller-aligned),
    async_no_est draws one phase from rng, async_est takes the maximum
    (lowest index on ties).
    """
    filtered, group_delay = matched_filter(signal, spec)
    aligned = filtered.samples[2 * group_delay :]
    stats = phase_statistics(aligned, cfg.weights, cfg.n_symbols)
    t_max = float(stats.max())
    if cfg.mode == "synchronous":
        branch = 0
        statistic = float(stats[0])
    elif cfg.mode == "async_no_est":
        if rng is None:
            raise ValueError("async_no_est mode needs a random stream for the branch pick")
        branch = int(rng.integers(0, stats.size))
        statistic = float(stats[branch])
    else:  # async_est
        branch = int(np.argmax(stats))
        statistic = t_max
    return SensingResult(
        t_values=stats,
        t_max=t_max,
        chosen_branch=branch,
        statistic_used=statistic,
        threshold=cfg.threshold,
        decision="H1" if statistic > cfg.threshold else "H0",
        mode=cfg.mode,
    )


def energy_statistic(signal: IqBuffer, assumed_noise_var: float, n_samples: int) -> float:
    """Normalized average power over the first n_samples."""
    if assumed_noise_var <= 0:
        raise ValueError("assumed_noise_var must be positive")
    if n_samples > len(signal) or n_samples < 1:
        raise ValueError(f"n_samples {n_samples} outside signal length {len(signal)}")
    s = signal.samples[:n_samples]
    return float(np.mean(s.real**2 + s.imag**2) / assumed_noise_var)


def energy_detector(
    signal: IqBuffer, assumed_noise_var: float, n_samples: int, threshold: float
) -> str:
    """Classic radiometer baseline: H1 iff the normalized power beats the threshold."""
    return "H1" if energy_statistic(signal, assumed_noise_var, n_samples) > threshold else "H0"
