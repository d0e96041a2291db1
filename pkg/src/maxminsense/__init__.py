"""Max/min-SNR linear-combining spectrum sensing.

Designs extremal-SNR combiner weights from the pulse-shaping filter, applies
the resulting scale-invariant power-ratio detector to impaired OFDM baseband
signals, and calibrates/evaluates Pf and Pd by Monte Carlo.
"""

from .channel import (
    ChannelConfig,
    SpurSpec,
    add_awgn,
    apply_cfo,
    apply_timing_offset,
    estimate_snr,
    inject_spur,
)
from .design import (
    CombinerWeights,
    DesignMatrices,
    build_matrices,
    cosine_similarity,
    design_combiner,
    load_weights,
    rc_pulse,
    save_weights,
    solve_extremal_snr,
)
from .detector import (
    MODES,
    DetectorConfig,
    SensingResult,
    combine,
    energy_detector,
    matched_filter,
    phase_statistics,
    preprocess_spur_shift,
    sense,
    test_statistic,
)
from .estimator import MaxMinSnrDetector
from .iqfile import read_iq, write_iq
from .montecarlo import (
    CalibrationResult,
    RocPoint,
    calibrate,
    h0_statistics,
    predict_pd,
    predict_pf,
    q_function,
    q_inv,
    run_roc,
    run_sweep,
    write_sweep_csv,
)
from .signals import (
    IqBuffer,
    OfdmConfig,
    PulseSpec,
    ofdm_modulate,
    qpsk_map,
    shape_and_upsample,
    srrc_taps,
)

__version__ = "0.1.0"

__all__ = [
    "CalibrationResult",
    "ChannelConfig",
    "CombinerWeights",
    "DesignMatrices",
    "DetectorConfig",
    "IqBuffer",
    "MODES",
    "MaxMinSnrDetector",
    "OfdmConfig",
    "PulseSpec",
    "RocPoint",
    "SensingResult",
    "SpurSpec",
    "add_awgn",
    "apply_cfo",
    "apply_timing_offset",
    "build_matrices",
    "calibrate",
    "combine",
    "cosine_similarity",
    "design_combiner",
    "energy_detector",
    "estimate_snr",
    "h0_statistics",
    "inject_spur",
    "load_weights",
    "matched_filter",
    "ofdm_modulate",
    "phase_statistics",
    "predict_pd",
    "predict_pf",
    "preprocess_spur_shift",
    "q_function",
    "q_inv",
    "qpsk_map",
    "rc_pulse",
    "read_iq",
    "run_roc",
    "run_sweep",
    "save_weights",
    "sense",
    "shape_and_upsample",
    "solve_extremal_snr",
    "srrc_taps",
    "test_statistic",
    "write_iq",
    "write_sweep_csv",
]
