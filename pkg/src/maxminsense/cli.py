"""Command-line front end: design, calibrate, roc, sweep, sense.

Exit codes: 0 success, 2 usage/configuration error, 3 missing artifact
(e.g. weights file), 4 data error (bad IQ file). All randomness flows from
--seed; when omitted, a fresh seed is generated and printed so every run is
replayable. Every run echoes its fully-resolved configuration into the
output directory before computing.
"""

from __future__ import annotations

import argparse
import json
import math
import secrets
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import detector, iqfile, montecarlo
from .channel import ChannelConfig
from .design import (
    REFERENCE_DESIGNS,
    build_matrices,
    cosine_similarity,
    load_weights,
    save_weights,
    solve_extremal_snr,
)
from .detector import DetectorConfig, preprocess_spur_shift, sense, window_length
from .signals import IqBuffer, OfdmConfig, PulseSpec


class MissingArtifactError(Exception):
    pass


class DataError(Exception):
    pass


def _parse_number(text: str) -> float:
    """Parse a decimal or a/b fraction (used for CP ratios like 1/8)."""
    text = text.strip()
    if "/" in text:
        return float(Fraction(text))
    return float(text)


def _parse_values(text: str) -> list[float]:
    return [_parse_number(v) for v in text.split(",") if v.strip()]


def _read_config(path) -> dict:
    """Flat dotted-key configuration file: `section.key = value` per line."""
    config = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        config[key.strip()] = value.strip()
    return config


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=None, help="master random seed")
    p.add_argument("--jobs", type=int, default=None, help="worker parallelism cap")
    p.add_argument("--out", type=str, default=None, help="output directory")
    p.add_argument("--config", type=str, default=None, help="flat dotted-key config file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="maxminsense",
        description="Max/min-SNR linear-combining spectrum sensing toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("design", help="design combiner weights for a roll-off")
    d.add_argument("--rolloff", type=float, default=None)
    d.add_argument("--oversampling", type=int, default=None)
    d.add_argument("--span", type=int, default=None)
    d.add_argument("--symbol-period", type=float, default=None)
    d.add_argument("--truncation", type=int, default=None)
    _add_common(d)

    for name, help_text in (
        ("calibrate", "calibrate detection thresholds on noise-only trials"),
        ("roc", "estimate (Pf, Pd) over a threshold grid"),
        ("sweep", "evaluate Pf/Pd along one swept parameter"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--weights", type=str, default=None, help="weights file path")
        p.add_argument("--rolloff", type=float, default=None,
                       help="resolve weights file in --out by roll-off")
        p.add_argument("--n-symbols", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--mode", type=str, default=None,
                       help="synchronous | async-no-est | async-est")
        p.add_argument("--snr-db", type=float, default=None)
        p.add_argument("--noise-uncertainty-db", type=float, default=None)
        p.add_argument("--cfo-hz", type=float, default=None)
        p.add_argument("--timing-frac", type=str, default=None,
                       help="t0/P_s in [0,1), or 'random' per trial")
        p.add_argument("--cp-ratio", type=str, default=None)
        if name == "calibrate":
            p.add_argument("--pf", type=float, default=None)
        if name == "roc":
            p.add_argument("--thresholds", type=str, default=None,
                           help="comma-separated threshold grid")
        if name == "sweep":
            p.add_argument("--param", type=str, default=None,
                           choices=("snr", "n-symbols", "rolloff", "cp"))
            p.add_argument("--values", type=str, default=None)
            p.add_argument("--pf", type=float, default=None)
        _add_common(p)

    s = sub.add_parser("sense", help="offline sensing over an IQ file")
    s.add_argument("--iq", type=str, required=True)
    s.add_argument("--weights", type=str, default=None)
    s.add_argument("--rolloff", type=float, default=None)
    s.add_argument("--threshold", type=float, default=None)
    s.add_argument("--mode", type=str, default=None)
    s.add_argument("--n-symbols", type=int, default=None)
    s.add_argument("--spur-shift", action="store_true", default=False)
    _add_common(s)

    return parser


class _Resolver:
    """Merge precedence: command-line flag, then config file, then default."""

    def __init__(self, args, config):
        self.args = args
        self.config = config
        self.resolved = {}

    def get(self, attr, key, cast, default):
        value = getattr(self.args, attr, None)
        if value is None and key in self.config:
            value = cast(self.config[key])
        if value is None:
            value = default
        self.resolved[key] = value
        return value


def _echo_config(resolved: dict, out_dir: Path | None):
    if out_dir is None:
        return
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = [f"{k} = {v}" for k, v in sorted(resolved.items())]
    (out_dir / "resolved_config.txt").write_text("\n".join(lines) + "\n")


def _resolve_seed(r: _Resolver) -> int:
    seed = r.get("seed", "run.seed", int, None)
    if seed is None:
        seed = secrets.randbits(63)
        print(f"seed = {seed}  (generated; pass --seed to replay)")
        r.resolved["run.seed"] = seed
    return int(seed)


def _pulse_from(r: _Resolver, rolloff) -> PulseSpec:
    return PulseSpec(
        rolloff=rolloff,
        symbol_period_s=r.get("symbol_period", "pulse.symbol_period_s", float, 1.0 / 625e3),
        oversampling=r.get("oversampling", "pulse.oversampling", int, 8),
        span_symbols=r.get("span", "pulse.span_symbols", int, 16),
    )


def _mode_from(r: _Resolver) -> str:
    mode = r.get("mode", "run.mode", str, "async_est").replace("-", "_")
    if mode not in detector.MODES:
        raise ValueError(f"mode must be one of {detector.MODES}, got {mode!r}")
    r.resolved["run.mode"] = mode
    return mode


def _channel_from(r: _Resolver, require_snr: bool) -> ChannelConfig:
    snr = r.get("snr_db", "channel.snr_db", float, None)
    if snr is None:
        if require_snr:
            raise ValueError("an SNR is required (--snr-db or channel.snr_db)")
        snr = math.inf
        r.resolved["channel.snr_db"] = snr
    timing = r.get("timing_frac", "channel.timing_offset_frac", str, "0")
    timing = None if str(timing).strip().lower() == "random" else float(timing)
    r.resolved["channel.timing_offset_frac"] = "random" if timing is None else timing
    return ChannelConfig(
        snr_db=float(snr),
        noise_uncertainty_db=r.get(
            "noise_uncertainty_db", "channel.noise_uncertainty_db", float, 0.0
        ),
        cfo_hz=r.get("cfo_hz", "channel.cfo_hz", float, 0.0),
        timing_offset_frac=timing,
    )


def _ofdm_from(r: _Resolver) -> OfdmConfig:
    cp = r.get("cp_ratio", "ofdm.cp_ratio", _parse_number, 0.125)
    if isinstance(cp, str):
        cp = _parse_number(cp)
    r.resolved["ofdm.cp_ratio"] = cp
    return OfdmConfig(
        n_fft=r.get("ofdm_n_fft", "ofdm.n_fft", int, 256),
        cp_ratio=cp,
    )


def _weights_path(out_dir: Path, rolloff: float) -> Path:
    return out_dir / f"weights_rolloff{rolloff:g}.json"


def _load_weights_for(r: _Resolver, out_dir: Path):
    path = r.get("weights", "run.weights", str, None)
    if path is None:
        rolloff = r.get("rolloff", "pulse.rolloff", float, None)
        if rolloff is None:
            raise ValueError("pass --weights FILE or --rolloff BETA")
        path = _weights_path(out_dir, rolloff)
    path = Path(path)
    r.resolved["run.weights"] = str(path)
    if not path.exists():
        raise MissingArtifactError(
            f"weights file {path} not found; run `maxminsense design --rolloff BETA "
            f"--out {out_dir}` first"
        )
    return load_weights(path)


# -- command handlers -------------------------------------------------------


def cmd_design(args) -> int:
    config = _read_config(args.config) if args.config else {}
    r = _Resolver(args, config)
    rolloff = r.get("rolloff", "pulse.rolloff", float, None)
    if rolloff is None:
        raise ValueError("design requires --rolloff")
    spec = _pulse_from(r, rolloff)  # validates rolloff before any file is written
    truncation = r.get("truncation", "design.truncation_k", int, 16)
    out_dir = Path(r.get("out", "run.out", str, "out"))
    _echo_config(r.resolved, out_dir)

    matrices = build_matrices(spec, truncation)
    weights = solve_extremal_snr(matrices)
    evals = np.linalg.eigvalsh(matrices.B)
    report = [
        f"rolloff          = {spec.rolloff}",
        f"oversampling     = {spec.oversampling}",
        f"span_symbols     = {spec.span_symbols}",
        f"truncation_k     = {truncation}",
        f"gamma_min        = {weights.gamma_min!r}",
        f"gamma_max        = {weights.gamma_max!r}",
        f"gamma_d          = {weights.gamma_d!r}",
        f"noise_rank       = {weights.rank}",
        f"B_condition      = {evals[-1] / evals[0]:.6e}",
    ]
    ref = REFERENCE_DESIGNS.get(round(spec.rolloff, 6))
    if ref is not None:
        cs_min = cosine_similarity(weights.alpha_min, ref["alpha_min"])
        cs_max = cosine_similarity(weights.alpha_max, ref["alpha_max"])
        report += [
            f"reference_cosine_alpha_min = {cs_min:.6f}",
            f"reference_cosine_alpha_max = {cs_max:.6f}",
        ]
    wpath = _weights_path(out_dir, spec.rolloff)
    save_weights(weights, wpath)
    (out_dir / "design_report.txt").write_text("\n".join(report) + "\n")
    for line in report:
        print(line)
    print(f"weights written to {wpath}")
    return 0


def cmd_calibrate(args) -> int:
    config = _read_config(args.config) if args.config else {}
    r = _Resolver(args, config)
    out_dir = Path(r.get("out", "run.out", str, "out"))
    seed = _resolve_seed(r)
    weights = _load_weights_for(r, out_dir)
    mode = _mode_from(r)
    n_symbols = r.get("n_symbols", "run.n_symbols", int, 8192)
    trials = r.get("trials", "run.trials", int, 2000)
    pf = r.get("pf", "run.pf", float, 0.1)
    jobs = r.get("jobs", "run.jobs", int, 1)
    channel = _channel_from(r, require_snr=False)
    ofdm = _ofdm_from(r)
    _echo_config(r.resolved, out_dir)

    cal = montecarlo.calibrate(
        weights, weights.spec, channel, n_symbols, trials,
        mode=mode, ofdm=ofdm, master_seed=seed,
        pf_targets=(0.05, pf, 0.2) if pf not in (0.05, 0.2) else (0.05, 0.1, 0.2),
        n_jobs=jobs,
    )
    doc = {
        "sigma_h0": cal.sigma_h0,
        "threshold_for_pf": {m: {str(k): v for k, v in t.items()}
                             for m, t in cal.threshold_for_pf.items()},
        "trials": cal.trials,
        "n_symbols": cal.n_symbols,
        "mode": cal.mode,
        "seed": cal.master_seed,
    }
    (out_dir / "calibration.json").write_text(json.dumps(doc, indent=2) + "\n")
    print(f"sigma_h0 = {cal.sigma_h0!r}")
    print(f"threshold_pf{pf:g} ({mode}) = {cal.threshold(pf, mode)!r}")
    return 0


def cmd_roc(args) -> int:
    config = _read_config(args.config) if args.config else {}
    r = _Resolver(args, config)
    out_dir = Path(r.get("out", "run.out", str, "out"))
    seed = _resolve_seed(r)
    weights = _load_weights_for(r, out_dir)
    mode = _mode_from(r)
    n_symbols = r.get("n_symbols", "run.n_symbols", int, 8192)
    trials = r.get("trials", "run.trials", int, 2000)
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    thresholds_text = r.get("thresholds", "run.thresholds", str, None)
    if not thresholds_text:
        raise ValueError("roc requires --thresholds")
    thresholds = _parse_values(thresholds_text)
    jobs = r.get("jobs", "run.jobs", int, 1)
    channel = _channel_from(r, require_snr=True)
    ofdm = _ofdm_from(r)
    _echo_config(r.resolved, out_dir)

    points = montecarlo.run_roc(
        weights, weights.spec, channel, n_symbols, trials, thresholds,
        mode=mode, ofdm=ofdm, master_seed=seed, n_jobs=jobs,
    )
    rows = [
        {
            "mode": mode,
            "beta": weights.spec.rolloff,
            "snr_db": channel.snr_db,
            "n_symbols": n_symbols,
            "cp_ratio": ofdm.cp_ratio,
            "threshold": p.threshold,
            "pf_hat": p.pf_hat,
            "pf_ci95": p.pf_ci95,
            "pd_hat": p.pd_hat,
            "pd_ci95": p.pd_ci95,
            "trials": p.trials,
            "seed": seed,
        }
        for p in points
    ]
    path = out_dir / "roc.csv"
    montecarlo.write_sweep_csv(rows, path)
    for p in points:
        print(f"threshold={p.threshold:g} pf={p.pf_hat:.4f}+-{p.pf_ci95:.4f} "
              f"pd={p.pd_hat:.4f}+-{p.pd_ci95:.4f}")
    print(f"roc written to {path}")
    return 0


def cmd_sweep(args) -> int:
    config = _read_config(args.config) if args.config else {}
    r = _Resolver(args, config)
    out_dir = Path(r.get("out", "run.out", str, "out"))
    seed = _resolve_seed(r)
    weights = _load_weights_for(r, out_dir)
    mode = _mode_from(r)
    param = r.get("param", "sweep.param", str, None)
    values_text = r.get("values", "sweep.values", str, None)
    if param is None or not values_text:
        raise ValueError("sweep requires --param and --values")
    param_map = {"snr": "snr", "n-symbols": "n_symbols", "rolloff": "rolloff", "cp": "cp_ratio"}
    if param not in param_map:
        raise ValueError(f"unknown sweep parameter {param!r}")
    values = _parse_values(values_text)
    n_symbols = r.get("n_symbols", "run.n_symbols", int, 8192)
    trials = r.get("trials", "run.trials", int, 2000)
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    pf = r.get("pf", "run.pf", float, 0.1)
    jobs = r.get("jobs", "run.jobs", int, 1)
    channel = _channel_from(r, require_snr=(param != "snr"))
    ofdm = _ofdm_from(r)
    _echo_config(r.resolved, out_dir)

    if param == "snr" and not math.isfinite(channel.snr_db):
        channel = ChannelConfig(
            snr_db=values[0],
            noise_uncertainty_db=channel.noise_uncertainty_db,
            cfo_hz=channel.cfo_hz,
            timing_offset_frac=channel.timing_offset_frac,
            spur=channel.spur,
        )
    rows = montecarlo.run_sweep(
        param_map[param], values, weights, weights.spec, channel,
        n_symbols, trials, mode=mode, ofdm=ofdm, master_seed=seed,
        pf_target=pf, n_jobs=jobs,
    )
    path = out_dir / f"sweep_{param_map[param]}.csv"
    montecarlo.write_sweep_csv(rows, path)
    for row, value in zip(rows, values):
        print(f"{param}={value:g} threshold={row['threshold']:.4f} "
              f"pf={row['pf_hat']:.4f}+-{row['pf_ci95']:.4f} "
              f"pd={row['pd_hat']:.4f}+-{row['pd_ci95']:.4f}")
    print(f"sweep written to {path}")
    return 0


def cmd_sense(args) -> int:
    config = _read_config(args.config) if args.config else {}
    r = _Resolver(args, config)
    out = r.get("out", "run.out", str, None)
    seed = _resolve_seed(r)
    weights_path = r.get("weights", "run.weights", str, None)
    if weights_path is None:
        raise ValueError("sense requires --weights FILE")
    if not Path(weights_path).exists():
        raise MissingArtifactError(f"weights file {weights_path} not found")
    weights = load_weights(weights_path)
    mode = _mode_from(r)
    n_symbols = r.get("n_symbols", "run.n_symbols", int, 8192)
    threshold = r.get("threshold", "run.threshold", float, None)
    if threshold is None:
        raise ValueError("sense requires --threshold")
    _echo_config(r.resolved, Path(out) if out else None)

    try:
        buf, _meta = iqfile.read_iq(args.iq)
    except (OSError, ValueError) as exc:
        raise DataError(str(exc)) from exc
    spec = weights.spec
    if abs(buf.sample_rate_hz - spec.sample_rate_hz) > 1e-6 * spec.sample_rate_hz:
        raise DataError(
            f"IQ rate {buf.sample_rate_hz} Hz does not match the weights' "
            f"rate {spec.sample_rate_hz} Hz"
        )
    gd = spec.span_symbols * spec.oversampling
    win_len = 2 * gd + window_length(weights, n_symbols)
    n_windows = len(buf) // win_len
    if n_windows == 0:
        raise DataError(
            f"file holds {len(buf)} samples, shorter than one {win_len}-sample window"
        )
    cfg = DetectorConfig(weights=weights, n_symbols=n_symbols, mode=mode, threshold=threshold)
    rng = np.random.default_rng(seed)
    for w in range(n_windows):
        chunk = buf.samples[w * win_len : (w + 1) * win_len]
        window = IqBuffer(chunk, buf.sample_rate_hz)
        if args.spur_shift:
            window = preprocess_spur_shift(window)
        result = sense(window, cfg, spec, rng=rng)
        print(result.format_record(w))
    return 0


_HANDLERS = {
    "design": cmd_design,
    "calibrate": cmd_calibrate,
    "roc": cmd_roc,
    "sweep": cmd_sweep,
    "sense": cmd_sense,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except MissingArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
