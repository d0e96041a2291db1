"""Scikit-learn style front end for the max/min-SNR detector.

MaxMinSnrDetector follows the anomaly-detection estimator idiom: fit() on
noise-only data (provided, or synthesized by the Monte Carlo harness when X
is None) designs the combiner and calibrates the decision threshold for the
target false-alarm rate, predict() labels complex IQ windows with 1 (signal
present) or 0 (noise only), and decision_function() returns the margin over
the threshold.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import montecarlo
from .channel import ChannelConfig
from .design import design_combiner
from .detector import MODES, matched_filter, phase_statistics, window_length
from .signals import IqBuffer, PulseSpec


def check_iq_windows(X, min_len: int | None = None) -> np.ndarray:
    """Validate a batch of complex IQ windows, returning a 2-D complex array."""
    X = np.asarray(X)
    if X.ndim == 1:
        raise ValueError(
            "expected a 2-D array of IQ windows (n_windows, window_samples); "
            "reshape a single window to shape (1, -1)"
        )
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D array, got ndim={X.ndim}")
    if not np.iscomplexobj(X):
        raise ValueError("IQ windows must be complex-valued")
    if not np.all(np.isfinite(X)):
        raise ValueError("IQ windows must be finite")
    if min_len is not None and X.shape[1] < min_len:
        raise ValueError(
            f"window length {X.shape[1]} is shorter than the required {min_len} samples"
        )
    return X


class MaxMinSnrDetector(BaseEstimator):
    """Spectrum-presence detector built on extremal-SNR linear combining.

    Parameters mirror the pulse model (rolloff, oversampling, span_symbols,
    symbol_period_s), the detection window (n_symbols), the detection mode,
    and the calibration budget. The statistic is a ratio of combined branch
    powers, so detection is immune to absolute scaling of the input.
    """

    def __init__(
        self,
        rolloff: float = 0.2,
        oversampling: int = 8,
        span_symbols: int = 16,
        symbol_period_s: float = 1.0,
        n_symbols: int = 1024,
        mode: str = "async_est",
        target_pf: float = 0.1,
        calibration_trials: int = 2000,
        truncation_k: int = 16,
        random_state: int | None = None,
        n_jobs: int = 1,
    ):
        self.rolloff = rolloff
        self.oversampling = oversampling
        self.span_symbols = span_symbols
        self.symbol_period_s = symbol_period_s
        self.n_symbols = n_symbols
        self.mode = mode
        self.target_pf = target_pf
        self.calibration_trials = calibration_trials
        self.truncation_k = truncation_k
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _pulse_spec(self) -> PulseSpec:
        return PulseSpec(
            rolloff=self.rolloff,
            symbol_period_s=self.symbol_period_s,
            oversampling=self.oversampling,
            span_symbols=self.span_symbols,
        )

    def _min_window_len(self) -> int:
        # Full filter support plus the aligned statistic window.
        gd = self.span_symbols * self.oversampling
        return 2 * gd + window_length(self.weights_, self.n_symbols)

    def fit(self, X=None, y=None):
        """Design the combiner and calibrate the threshold on noise-only data.

        X: optional noise-only IQ windows, shape (n_windows, window_samples).
        When omitted, the threshold comes from a seeded Monte Carlo
        calibration at the configured window size.
        """
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0.0 < self.target_pf < 1.0:
            raise ValueError("target_pf must lie in (0, 1)")
        spec = self._pulse_spec()
        self.weights_ = design_combiner(spec, self.truncation_k)
        seed = self.random_state if self.random_state is not None else 0
        if X is None:
            cal = montecarlo.calibrate(
                self.weights_,
                spec,
                ChannelConfig(),
                self.n_symbols,
                self.calibration_trials,
                mode=self.mode,
                master_seed=seed,
                pf_targets=(self.target_pf,),
                n_jobs=self.n_jobs,
            )
            self.threshold_ = cal.threshold(self.target_pf, self.mode)
            self.sigma_h0_ = cal.sigma_h0
        else:
            X = check_iq_windows(X)
            stats = self._window_statistics(X)
            self.threshold_ = float(np.quantile(stats, 1.0 - self.target_pf))
            self.sigma_h0_ = float(np.std(stats, ddof=1)) if stats.size > 1 else 0.0
            self.n_features_in_ = X.shape[1]
        return self

    def _window_statistics(self, X: np.ndarray) -> np.ndarray:
        spec = self._pulse_spec()
        X = check_iq_windows(X, self._min_window_len())
        rng = np.random.default_rng(self.random_state)
        gd = self.span_symbols * self.oversampling
        out = np.empty(X.shape[0])
        for i, row in enumerate(X):
            filtered, _ = matched_filter(IqBuffer(row, spec.sample_rate_hz), spec)
            stats = phase_statistics(filtered.samples[2 * gd :], self.weights_, self.n_symbols)
            if self.mode == "synchronous":
                out[i] = stats[0]
            elif self.mode == "async_no_est":
                out[i] = stats[int(rng.integers(0, stats.size))]
            else:
                out[i] = stats.max()
        return out

    def score_samples(self, X) -> np.ndarray:
        """Detection statistic per window (higher means more signal-like)."""
        check_is_fitted(self, "weights_")
        return self._window_statistics(X)

    def decision_function(self, X) -> np.ndarray:
        """Statistic minus threshold; positive values mean signal present."""
        check_is_fitted(self, "threshold_")
        return self.score_samples(X) - self.threshold_

    def predict(self, X) -> np.ndarray:
        """1 where a signal is declared present (H1), 0 for noise only (H0)."""
        return (self.decision_function(X) > 0.0).astype(int)

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X).predict(X)

    def _more_tags(self):
        return {"X_types": ["2darray"], "allow_nan": False}
