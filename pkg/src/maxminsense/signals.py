"""Baseband signal generation: QPSK mapping, OFDM framing, SRRC pulse shaping.

All functions are pure and deterministic given their inputs; random bits are
owned by the caller.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import oaconvolve

# Gray-coded QPSK constellation, indexed by (b0 << 1) | b1 for bit pair (b0, b1):
# 00 -> (+1+j)/sqrt2, 01 -> (-1+j)/sqrt2, 11 -> (-1-j)/sqrt2, 10 -> (+1-j)/sqrt2
_QPSK = np.array([1 + 1j, -1 + 1j, 1 - 1j, -1 - 1j]) / np.sqrt(2.0)


@dataclass
class IqBuffer:
    """Complex baseband sample stream with its sample rate."""

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        if self.samples.ndim != 1:
            raise ValueError("IqBuffer samples must be a 1-D sequence")
        if not np.iscomplexobj(self.samples):
            self.samples = self.samples.astype(np.complex128)
        if self.samples.size and not np.all(np.isfinite(self.samples)):
            raise ValueError("IqBuffer samples must be finite (no NaN/Inf)")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")

    def __len__(self):
        return self.samples.size

    def power(self) -> float:
        """Mean squared magnitude of the stream."""
        s = self.samples
        return float(np.mean(s.real**2 + s.imag**2))


@dataclass(frozen=True)
class PulseSpec:
    """Square-root raised-cosine pulse description.

    rolloff: excess-bandwidth factor, in (0, 1].
    symbol_period_s: symbol period in seconds.
    oversampling: samples per symbol period at the detector rate.
    span_symbols: one-sided truncation of the filter, in symbol periods.
    """

    rolloff: float
    symbol_period_s: float = 1.0
    oversampling: int = 8
    span_symbols: int = 16

    def __post_init__(self):
        if not 0.0 < self.rolloff <= 1.0:
            raise ValueError(f"rolloff must be in (0, 1], got {self.rolloff}")
        if not self.symbol_period_s > 0:
            raise ValueError("symbol_period_s must be positive")
        if self.oversampling < 1:
            raise ValueError("oversampling must be a positive integer")
        if self.span_symbols < 1:
            raise ValueError("span_symbols must be a positive integer")

    @property
    def sample_rate_hz(self) -> float:
        return self.oversampling / self.symbol_period_s

    def sampling_offsets(self) -> np.ndarray:
        """Intra-symbol sampling instants t_i = P_s*(1/2 + i/L), i = 0..L-1."""
        L = self.oversampling
        return self.symbol_period_s * (0.5 + np.arange(L) / L)


@dataclass(frozen=True)
class OfdmConfig:
    """OFDM framing parameters.

    used_subcarriers holds signed FFT-bin indices in (-n_fft/2, n_fft/2);
    index 0 (DC) must stay unused.
    """

    n_fft: int = 256
    used_subcarriers: tuple = field(
        default_factory=lambda: tuple(range(-120, 0)) + tuple(range(1, 121))
    )
    cp_ratio: float = 0.125
    modulation: str = "qpsk"

    def __post_init__(self):
        if self.n_fft < 2:
            raise ValueError("n_fft must be >= 2")
        carriers = tuple(self.used_subcarriers)
        if 0 in carriers:
            raise ValueError("DC subcarrier (index 0) must not be used")
        if len(set(carriers)) != len(carriers):
            raise ValueError("used_subcarriers contains duplicates")
        half = self.n_fft / 2
        if any(not -half < k < half for k in carriers):
            raise ValueError("subcarrier index outside (-n_fft/2, n_fft/2)")
        if not 0.0 <= self.cp_ratio <= 0.5:
            raise ValueError("cp_ratio must be in [0, 1/2]")
        cp = self.cp_ratio * self.n_fft
        if abs(cp - round(cp)) > 1e-9:
            raise ValueError("cp_ratio * n_fft must be an integer sample count")
        if self.modulation.lower() != "qpsk":
            raise ValueError(f"unsupported modulation {self.modulation!r}")
        object.__setattr__(self, "used_subcarriers", carriers)

    @property
    def cp_length(self) -> int:
        return int(round(self.cp_ratio * self.n_fft))

    @property
    def samples_per_symbol(self) -> int:
        """Time-domain samples per OFDM symbol including the cyclic prefix."""
        return self.n_fft + self.cp_length


def qpsk_map(bits) -> np.ndarray:
    """Map a bit sequence onto the Gray-coded unit-power QPSK constellation.

    Raises ValueError if the bit count is odd.
    """
    bits = np.asarray(bits)
    if bits.size % 2 != 0:
        raise ValueError(f"bit count must be even, got {bits.size}")
    b = bits.reshape(-1, 2).astype(np.int64)
    if b.size and (b.min() < 0 or b.max() > 1):
        raise ValueError("bits must be 0 or 1")
    return _QPSK[(b[:, 0] << 1) | b[:, 1]]


def ofdm_modulate(cfg: OfdmConfig, symbols, symbol_rate_hz: float = 1.0) -> IqBuffer:
    """OFDM-frame payload symbols into a unit-power time-domain stream.

    Payload symbols fill the used subcarriers in ascending index order, one
    OFDM symbol per |used_subcarriers| payload symbols; each inverse DFT body
    is prefixed with its last cp_ratio*n_fft samples.
    """
    symbols = np.asarray(symbols, dtype=np.complex128)
    n_used = len(cfg.used_subcarriers)
    if symbols.size % n_used != 0:
        raise ValueError(
            f"symbol count {symbols.size} is not a multiple of the "
            f"{n_used} used subcarriers"
        )
    n_sym = symbols.size // n_used
    bins = np.array(sorted(cfg.used_subcarriers)) % cfg.n_fft
    grid = np.zeros((n_sym, cfg.n_fft), dtype=np.complex128)
    grid[:, bins] = symbols.reshape(n_sym, n_used)
    body = np.fft.ifft(grid, axis=1)
    cp = cfg.cp_length
    if cp:
        frames = np.concatenate([body[:, cfg.n_fft - cp :], body], axis=1)
    else:
        frames = body
    out = frames.ravel()
    power = np.mean(out.real**2 + out.imag**2)
    if power > 0:
        out = out / np.sqrt(power)
    return IqBuffer(out, symbol_rate_hz)


def srrc_taps(spec: PulseSpec) -> np.ndarray:
    """Unit-energy SRRC taps sampled at P_s/L, length 2*span_symbols*L + 1.

    The removable singularities at t = 0 and t = +-P_s/(4*beta) are replaced
    by their analytic limits.
    """
    beta = spec.rolloff
    L = spec.oversampling
    k = np.arange(-spec.span_symbols * L, spec.span_symbols * L + 1)
    t = k / L  # in symbol periods
    taps = np.empty(t.shape)

    at_zero = k == 0
    pole = 1.0 / (4.0 * beta)
    at_pole = np.abs(np.abs(t) - pole) < 1e-9
    regular = ~(at_zero | at_pole)

    taps[at_zero] = 1.0 + beta * (4.0 / np.pi - 1.0)
    taps[at_pole] = (beta / np.sqrt(2.0)) * (
        (1.0 + 2.0 / np.pi) * np.sin(np.pi / (4.0 * beta))
        + (1.0 - 2.0 / np.pi) * np.cos(np.pi / (4.0 * beta))
    )
    tr = t[regular]
    num = np.sin(np.pi * tr * (1.0 - beta)) + 4.0 * beta * tr * np.cos(
        np.pi * tr * (1.0 + beta)
    )
    den = np.pi * tr * (1.0 - (4.0 * beta * tr) ** 2)
    taps[regular] = num / den

    return taps / np.sqrt(np.sum(taps * taps))


def shape_and_upsample(symbols, spec: PulseSpec):
    """Zero-stuff symbols by L and convolve with the SRRC taps.

    Returns (IqBuffer at rate L/P_s, group_delay_samples). Output sample m
    approximates the analog shaped signal at t = (m - group_delay)*P_s/L.
    Single-precision complex input is processed in single precision.
    """
    symbols = np.asarray(symbols)
    if symbols.size and not np.all(np.isfinite(symbols)):
        raise ValueError("symbols must be finite")
    L = spec.oversampling
    taps = srrc_taps(spec)
    if symbols.dtype == np.complex64:
        up = np.zeros(symbols.size * L, dtype=np.complex64)
        taps = taps.astype(np.float32)
    else:
        up = np.zeros(symbols.size * L, dtype=np.complex128)
        symbols = symbols.astype(np.complex128)
    up[::L] = symbols
    shaped = oaconvolve(up, taps, mode="full")
    group_delay = spec.span_symbols * L
    return IqBuffer(shaped, spec.sample_rate_hz), group_delay
