"""Shared IQ file format.

Sample files hold little-endian interleaved 32-bit floats (I then Q) with no
header. Metadata lives in a JSON sidecar at <file>.meta.json with keys:

    sample_rate_hz  (number, required)
    origin          (string, free-form provenance)
    format          (string, always "cf32le-interleaved")
    num_samples     (integer)
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .signals import IqBuffer

FORMAT_NAME = "cf32le-interleaved"


def sidecar_path(path) -> Path:
    return Path(str(path) + ".meta.json")


def write_iq(path, buf: IqBuffer, origin: str = "") -> None:
    """Write samples and the metadata sidecar."""
    s = buf.samples.astype(np.complex64)
    inter = np.empty(2 * s.size, dtype="<f4")
    inter[0::2] = s.real
    inter[1::2] = s.imag
    inter.tofile(path)
    meta = {
        "sample_rate_hz": float(buf.sample_rate_hz),
        "origin": origin,
        "format": FORMAT_NAME,
        "num_samples": int(s.size),
    }
    sidecar_path(path).write_text(json.dumps(meta, indent=2) + "\n")


def read_iq(path):
    """Read samples plus sidecar metadata; returns (IqBuffer, meta dict)."""
    side = sidecar_path(path)
    if not side.exists():
        raise FileNotFoundError(f"missing metadata sidecar {side}")
    meta = json.loads(side.read_text())
    if "sample_rate_hz" not in meta:
        raise ValueError(f"sidecar {side} lacks the sample_rate_hz key")
    inter = np.fromfile(path, dtype="<f4")
    if inter.size % 2:
        raise ValueError(f"{path}: odd float count, not interleaved I/Q")
    samples = inter.view("<c8")
    return IqBuffer(samples, float(meta["sample_rate_hz"])), meta
