"""Monte Carlo calibration and experiment harness.

Estimates the H0/H1 statistic spread empirically, calibrates detection
thresholds for a target false-alarm rate, evaluates the Gaussian-tail
predictions against simulation, and runs parameter sweeps.

Seeding: every trial derives counter-based substreams (symbols, noise,
uncertainty draw, timing, branch pick, spur) from (master_seed, trial index),
so results are bit-identical regardless of execution parallelism and toggling
one impairment perturbs nothing else.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from scipy.signal import oaconvolve
from scipy.special import erfc, erfcinv

from . import detector
from .channel import ChannelConfig, _fractional_delay_taps, complex_awgn
from .design import CombinerWeights, design_combiner
from .signals import OfdmConfig, PulseSpec, ofdm_modulate, qpsk_map, srrc_taps

# Per-trial substream identifiers.
_SYMBOLS, _NOISE, _UNCERTAINTY, _TIMING, _BRANCH, _SPUR = range(6)

_INTERP_HALFWIDTH = 32
_CHUNK = 256  # trials per work unit; fixed so results never depend on n_jobs


def _stream(master_seed: int, trial: int, purpose: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(trial), purpose))
    return np.random.Generator(np.random.Philox(seq))


def q_function(x):
    """Standard normal upper-tail probability Q(x) = erfc(x/sqrt2)/2."""
    return erfc(np.asarray(x, dtype=np.float64) / np.sqrt(2.0)) / 2.0


def q_inv(p):
    """Inverse of q_function on (0, 1)."""
    p = np.asarray(p, dtype=np.float64)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("q_inv argument must lie in (0, 1)")
    return np.sqrt(2.0) * erfcinv(2.0 * p)


def predict_pf(threshold: float, sigma_h0: float) -> float:
    """Asymptotic false-alarm probability Q(threshold / sigma_h0)."""
    if sigma_h0 <= 0:
        raise ValueError("sigma_h0 must be positive")
    return float(q_function(threshold / sigma_h0))


def predict_pd(
    threshold: float,
    weights: CombinerWeights,
    n_symbols: int,
    snr_linear: float,
    sigma_h1: float,
) -> float:
    """Asymptotic detection probability Q((threshold - mu)/sigma_h1).

    mu = sqrt(N) * gamma_d_op / (1 + gamma_min_op) with the per-unit-SNR
    gains scaled by the operational linear SNR.
    """
    if sigma_h1 <= 0:
        raise ValueError("sigma_h1 must be positive")
    gamma_min_op = weights.gamma_min * snr_linear
    gamma_d_op = weights.gamma_d * snr_linear
    mu = math.sqrt(n_symbols) * gamma_d_op / (1.0 + gamma_min_op)
    return float(q_function((threshold - mu) / sigma_h1))


@dataclass(frozen=True)
class CalibrationResult:
    """Empirical H0 statistic spread and thresholds for target Pf values.

    threshold_for_pf maps mode -> {target_pf: threshold}; sigma_h0 is the
    sample standard deviation of the single-phase statistic, sigma_h1/mu_hat
    (when estimated) the spread and mean of the phase-0 statistic under H1.
    """

    sigma_h0: float
    sigma_h1: float | None
    mu_hat: float | None
    threshold_for_pf: dict
    trials: int
    n_symbols: int
    mode: str
    master_seed: int

    def threshold(self, target_pf: float = 0.1, mode: str | None = None) -> float:
        return self.threshold_for_pf[mode or self.mode][target_pf]


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    pf_hat: float
    pd_hat: float
    pf_ci95: float
    pd_ci95: float
    trials: int


def _binomial_ci95(p_hat: float, trials: int) -> float:
    return 1.96 * math.sqrt(p_hat * (1.0 - p_hat) / trials)


class _TrialEngine:
    """Precomputed single-trial pipeline shared by calibration, ROC and sweeps.

    Trials run in single-precision complex with double-precision moment
    accumulation; the arithmetic is identical to the detector-module
    operations applied to the same streams.
    """

    def __init__(
        self,
        weights: CombinerWeights,
        spec: PulseSpec,
        channel: ChannelConfig,
        ofdm: OfdmConfig,
        n_symbols: int,
        master_seed: int,
        with_h1: bool,
        with_detector: bool = True,
        with_ed: bool = False,
    ):
        self.weights = weights
        self.spec = spec
        self.channel = channel
        self.ofdm = ofdm
        self.n = int(n_symbols)
        self.master_seed = int(master_seed)
        self.with_h1 = with_h1
        self.with_detector = with_detector
        self.with_ed = with_ed

        L = spec.oversampling
        self.L = L
        self.taps = srrc_taps(spec).astype(np.float32)
        self.group_delay = spec.span_symbols * L
        # Received-stream layout: symbol k of the shaped signal peaks at
        # k*L + group_delay; after the receive filter the designed sampling
        # grid t_i starts another group_delay + L/2 later.
        self.n_sk = self.n + 2 * spec.span_symbols + 8
        self.m = self.n_sk * L + 2 * self.group_delay
        self.start = 2 * self.group_delay + L // 2
        self.window = detector.window_length(weights, self.n)
        if self.start + self.window > self.m - _INTERP_HALFWIDTH:
            raise ValueError("internal length budget violated")
        self.signal_power = (
            None if channel.snr_db == math.inf else 10.0 ** (channel.snr_db / 10.0)
        )
        self.n_payload = (
            -(-self.n_sk // ofdm.samples_per_symbol) * len(ofdm.used_subcarriers)
        )
        self._rot = None
        if channel.cfo_hz:
            phase = (2.0 * np.pi * channel.cfo_hz / spec.sample_rate_hz) * np.arange(self.m)
            self._rot = (np.cos(phase) + 1j * np.sin(phase)).astype(np.complex64)
        self._spur_cycle = None
        if channel.spur is not None:
            cyc = detector._SPUR_SHIFT_CYCLE.astype(np.complex64)
            self._spur_cycle = cyc[np.arange(self.m) & 3]

    # -- per-trial pieces ---------------------------------------------------

    def _noise(self, trial: int) -> np.ndarray:
        var = 1.0
        if self.channel.noise_uncertainty_db > 0:
            u = _stream(self.master_seed, trial, _UNCERTAINTY).uniform(
                -self.channel.noise_uncertainty_db, self.channel.noise_uncertainty_db
            )
            var = 10.0 ** (u / 10.0)
        return complex_awgn(self.m, var, _stream(self.master_seed, trial, _NOISE), np.complex64)

    def _spur(self, trial: int) -> np.ndarray:
        spur = self.channel.spur
        fs = self.spec.sample_rate_hz
        rng = _stream(self.master_seed, trial, _SPUR)
        raw = complex_awgn(self.m, 1.0, rng, np.complex64)
        cutoff = spur.bandwidth_hz / 2.0 / fs
        ntaps = int(np.ceil(5.5 / cutoff)) | 1
        k = np.arange(ntaps) - (ntaps - 1) / 2.0
        lp = (2.0 * cutoff * np.sinc(2.0 * cutoff * k) * np.blackman(ntaps)).astype(np.float32)
        nb = oaconvolve(raw, lp, mode="same")
        if spur.center_hz:
            phase = (2.0 * np.pi * spur.center_hz / fs) * np.arange(self.m)
            nb = nb * (np.cos(phase) + 1j * np.sin(phase)).astype(np.complex64)
        rms = np.sqrt(np.mean(nb.real.astype(np.float64) ** 2 + nb.imag.astype(np.float64) ** 2))
        return nb * np.float32(spur.amplitude / rms)

    def _signal(self, trial: int) -> np.ndarray:
        rng = _stream(self.master_seed, trial, _SYMBOLS)
        bits = rng.integers(0, 2, size=2 * self.n_payload)
        sk = ofdm_modulate(self.ofdm, qpsk_map(bits)).samples[: self.n_sk]
        up = np.zeros(self.n_sk * self.L, dtype=np.complex64)
        # SNR convention: sigma_s^2 / sigma_w^2 with unit-variance symbols and
        # unit nominal noise variance, matching the per-unit-SNR gain scaling
        # consumed by predict_pd.
        up[:: self.L] = (sk * math.sqrt(self.signal_power)).astype(np.complex64)
        x = oaconvolve(up, self.taps, mode="full")
        frac = self.channel.timing_offset_frac
        if frac is None:
            frac = float(_stream(self.master_seed, trial, _TIMING).uniform(0.0, 1.0))
        if frac:
            fd = _fractional_delay_taps(frac * self.L, _INTERP_HALFWIDTH, np.float32)
            x = oaconvolve(x, fd, mode="full")[
                _INTERP_HALFWIDTH : _INTERP_HALFWIDTH + x.size
            ]
        if self._rot is not None:
            x = x * self._rot[: x.size]
        return x

    def _stats(self, received: np.ndarray) -> np.ndarray:
        r = received
        if self._spur_cycle is not None:
            r = r * self._spur_cycle[: r.size]
        f = oaconvolve(r, self.taps, mode="full")
        return detector.phase_statistics(
            f[self.start : self.start + self.window], self.weights, self.n
        )

    def _ed(self, received: np.ndarray) -> float:
        seg = received[self.group_delay : self.group_delay + self.n * self.L]
        return float(np.mean(seg.real.astype(np.float64) ** 2 + seg.imag.astype(np.float64) ** 2))

    # -- public entry -------------------------------------------------------

    def run_chunk(self, trials: np.ndarray):
        L = self.L
        h0 = np.empty((trials.size, L)) if self.with_detector else None
        h1 = np.empty((trials.size, L)) if (self.with_detector and self.with_h1) else None
        ed0 = np.empty(trials.size) if self.with_ed else None
        ed1 = np.empty(trials.size) if (self.with_ed and self.with_h1) else None
        for row, trial in enumerate(trials):
            noise = self._noise(int(trial))
            r0 = noise
            if self.channel.spur is not None:
                r0 = r0 + self._spur(int(trial))
            if self.with_detector:
                h0[row] = self._stats(r0)
            if self.with_ed:
                ed0[row] = self._ed(r0)
            if self.with_h1:
                r1 = r0 + self._signal(int(trial))
                if self.with_detector:
                    h1[row] = self._stats(r1)
                if self.with_ed:
                    ed1[row] = self._ed(r1)
        return h0, h1, ed0, ed1


def _run_trials(engine: _TrialEngine, trials: int, n_jobs: int):
    chunks = [np.arange(a, min(a + _CHUNK, trials)) for a in range(0, trials, _CHUNK)]
    parts = Parallel(n_jobs=n_jobs)(delayed(engine.run_chunk)(c) for c in chunks)
    merged = []
    for idx in range(4):
        blocks = [p[idx] for p in parts]
        merged.append(np.concatenate(blocks) if blocks[0] is not None else None)
    return tuple(merged)


def _branch_picks(master_seed: int, trials: int, n_branches: int) -> np.ndarray:
    return np.array(
        [int(_stream(master_seed, t, _BRANCH).integers(0, n_branches)) for t in range(trials)]
    )


def _mode_statistics(stats: np.ndarray, mode: str, picks: np.ndarray) -> np.ndarray:
    if mode == "synchronous":
        return stats[:, 0]
    if mode == "async_no_est":
        return stats[np.arange(stats.shape[0]), picks]
    if mode == "async_est":
        return stats.max(axis=1)
    raise ValueError(f"unknown mode {mode!r}")


def h0_statistics(
    weights: CombinerWeights,
    spec: PulseSpec,
    channel: ChannelConfig,
    n_symbols: int,
    trials: int,
    ofdm: OfdmConfig | None = None,
    master_seed: int = 0,
    n_jobs: int = 1,
) -> np.ndarray:
    """Per-phase statistics of independent noise-only trials, shape (trials, L)."""
    engine = _TrialEngine(
        weights, spec, channel, ofdm or OfdmConfig(), n_symbols, master_seed, with_h1=False
    )
    h0, _, _, _ = _run_trials(engine, trials, n_jobs)
    return h0


def calibrate(
    weights: CombinerWeights,
    spec: PulseSpec,
    channel: ChannelConfig,
    n_symbols: int,
    trials: int,
    mode: str = "async_est",
    ofdm: OfdmConfig | None = None,
    master_seed: int = 0,
    pf_targets=(0.05, 0.1, 0.2),
    n_jobs: int = 1,
    estimate_h1: bool = False,
) -> CalibrationResult:
    """Estimate the H0 statistic spread and empirical thresholds.

    Runs independent noise-only trials, records the statistic of every mode,
    and returns the (1 - pf)-quantile for each requested target. With
    estimate_h1=True (channel SNR must be finite) paired H1 trials also yield
    sigma_h1 and mu_hat of the phase-0 statistic.
    """
    if trials < 1000:
        raise ValueError(f"calibration needs >= 1000 trials, got {trials}")
    if mode not in detector.MODES:
        raise ValueError(f"mode must be one of {detector.MODES}")
    if estimate_h1 and not math.isfinite(channel.snr_db):
        raise ValueError("estimate_h1 requires a finite channel SNR")
    engine = _TrialEngine(
        weights, spec, channel, ofdm or OfdmConfig(), n_symbols, master_seed, with_h1=estimate_h1
    )
    h0, h1, _, _ = _run_trials(engine, trials, n_jobs)
    picks = _branch_picks(master_seed, trials, weights.oversampling)
    thresholds = {}
    for m in detector.MODES:
        samples = _mode_statistics(h0, m, picks)
        thresholds[m] = {
            float(pf): float(np.quantile(samples, 1.0 - pf)) for pf in pf_targets
        }
    sigma_h1 = mu_hat = None
    if estimate_h1:
        sigma_h1 = float(np.std(h1[:, 0], ddof=1))
        mu_hat = float(np.mean(h1[:, 0]))
    return CalibrationResult(
        sigma_h0=float(np.std(h0[:, 0], ddof=1)),
        sigma_h1=sigma_h1,
        mu_hat=mu_hat,
        threshold_for_pf=thresholds,
        trials=trials,
        n_symbols=n_symbols,
        mode=mode,
        master_seed=master_seed,
    )


def run_roc(
    weights: CombinerWeights,
    spec: PulseSpec,
    channel: ChannelConfig,
    n_symbols: int,
    trials: int,
    thresholds,
    mode: str = "async_est",
    ofdm: OfdmConfig | None = None,
    master_seed: int = 0,
    n_jobs: int = 1,
) -> list[RocPoint]:
    """Estimate (Pf, Pd) at each threshold from paired H0/H1 trials.

    Each trial draws one H0 and one H1 realization from common per-trial
    substreams; the statistic is evaluated once and scored against the whole
    threshold grid. Deterministic given the master seed.
    """
    thresholds = list(thresholds)
    if not thresholds:
        raise ValueError("thresholds must be non-empty")
    if channel.snr_db == math.inf:
        raise ValueError("run_roc requires a noisy channel (snr_db < inf) for the H1 branch")
    engine = _TrialEngine(
        weights, spec, channel, ofdm or OfdmConfig(), n_symbols, master_seed, with_h1=True
    )
    h0, h1, _, _ = _run_trials(engine, trials, n_jobs)
    picks = _branch_picks(master_seed, trials, weights.oversampling)
    s0 = _mode_statistics(h0, mode, picks)
    s1 = _mode_statistics(h1, mode, picks)
    points = []
    for lam in thresholds:
        pf = float(np.mean(s0 > lam))
        pd = float(np.mean(s1 > lam))
        points.append(
            RocPoint(
                threshold=float(lam),
                pf_hat=pf,
                pd_hat=pd,
                pf_ci95=_binomial_ci95(pf, trials),
                pd_ci95=_binomial_ci95(pd, trials),
                trials=trials,
            )
        )
    return points


SWEEP_PARAMETERS = ("snr", "n_symbols", "rolloff", "cp_ratio")

SWEEP_CSV_COLUMNS = (
    "mode",
    "beta",
    "snr_db",
    "n_symbols",
    "cp_ratio",
    "threshold",
    "pf_hat",
    "pf_ci95",
    "pd_hat",
    "pd_ci95",
    "trials",
    "seed",
)


def run_sweep(
    parameter: str,
    values,
    weights: CombinerWeights,
    spec: PulseSpec,
    channel: ChannelConfig,
    n_symbols: int,
    trials: int,
    mode: str = "async_est",
    ofdm: OfdmConfig | None = None,
    master_seed: int = 0,
    pf_target: float = 0.1,
    calibration_trials: int | None = None,
    n_jobs: int = 1,
) -> list[dict]:
    """Evaluate (Pf, Pd) along one swept parameter at a calibrated threshold.

    The threshold is calibrated once for the fixed configuration (per value
    for roll-off sweeps, where the weights are redesigned; at the largest
    window for n_symbols sweeps, exercising the threshold's asymptotic
    window-size invariance). All values share per-trial substreams, so
    cross-value comparisons use common random numbers.
    """
    values = list(values)
    if parameter not in SWEEP_PARAMETERS:
        raise ValueError(f"parameter must be one of {SWEEP_PARAMETERS}")
    if not values:
        raise ValueError("values must be non-empty")
    ofdm = ofdm or OfdmConfig()
    cal_trials = calibration_trials or trials

    def _calibrate(w, s, n_ref):
        return calibrate(
            w,
            s,
            channel,
            n_ref,
            cal_trials,
            mode=mode,
            ofdm=ofdm,
            master_seed=master_seed + 1,  # distinct from the evaluation trials
            pf_targets=(pf_target,),
            n_jobs=n_jobs,
        ).threshold(pf_target, mode)

    rows = []
    if parameter != "rolloff":
        n_ref = int(max(values)) if parameter == "n_symbols" else n_symbols
        lam = _calibrate(weights, spec, n_ref)
    for value in values:
        w, s, ch, of, n = weights, spec, channel, ofdm, n_symbols
        if parameter == "snr":
            ch = dataclasses.replace(channel, snr_db=float(value))
        elif parameter == "n_symbols":
            n = int(value)
        elif parameter == "cp_ratio":
            of = dataclasses.replace(ofdm, cp_ratio=float(value))
        else:  # rolloff
            s = dataclasses.replace(spec, rolloff=float(value))
            w = design_combiner(s, weights.truncation_k)
            lam = _calibrate(w, s, n)
        point = run_roc(
            w, s, ch, n, trials, [lam], mode=mode, ofdm=of,
            master_seed=master_seed, n_jobs=n_jobs,
        )[0]
        rows.append(
            {
                "mode": mode,
                "beta": s.rolloff,
                "snr_db": ch.snr_db,
                "n_symbols": n,
                "cp_ratio": of.cp_ratio,
                "threshold": point.threshold,
                "pf_hat": point.pf_hat,
                "pf_ci95": point.pf_ci95,
                "pd_hat": point.pd_hat,
                "pd_ci95": point.pd_ci95,
                "trials": point.trials,
                "seed": master_seed,
            }
        )
    return rows


def write_sweep_csv(rows, path) -> None:
    """Write sweep/ROC rows as CSV with full-precision decimal numbers."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_CSV_COLUMNS)
        for row in rows:
            writer.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in SWEEP_CSV_COLUMNS])


def energy_detector_statistics(
    channel: ChannelConfig,
    spec: PulseSpec,
    n_symbols: int,
    trials: int,
    ofdm: OfdmConfig | None = None,
    master_seed: int = 0,
    n_jobs: int = 1,
):
    """Paired H0/H1 normalized-power statistics for the radiometer baseline.

    The receiver's assumed noise variance is the nominal (uncertainty-free)
    value, so the statistic directly exposes the noise-uncertainty wall.
    """
    weights = design_combiner(spec)  # only carries L for layout purposes
    engine = _TrialEngine(
        weights,
        spec,
        channel,
        ofdm or OfdmConfig(),
        n_symbols,
        master_seed,
        with_h1=True,
        with_detector=False,
        with_ed=True,
    )
    _, _, ed0, ed1 = _run_trials(engine, trials, n_jobs)
    return ed0, ed1


def ed_operating_point(ed_h0, ed_h1, pf_max: float = 0.1, pd_min: float = 0.9):
    """Exhaustively scan thresholds for one meeting Pf <= pf_max and Pd >= pd_min.

    Returns (achievable, best_pd_at_feasible_pf). Candidate thresholds are the
    pooled observed statistics, which is exhaustive for empirical (Pf, Pd).
    """
    ed_h0 = np.asarray(ed_h0)
    ed_h1 = np.asarray(ed_h1)
    candidates = np.unique(np.concatenate([ed_h0, ed_h1]))
    best_pd = 0.0
    achievable = False
    for lam in candidates:
        pf = np.mean(ed_h0 > lam)
        if pf <= pf_max:
            pd = float(np.mean(ed_h1 > lam))
            best_pd = max(best_pd, pd)
            if pd >= pd_min:
                achievable = True
    return achievable, best_pd
