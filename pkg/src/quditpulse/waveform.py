"""Lab-frame AWG sample synthesis for multichromatic pulse sequences.

Each tone contributes (Omega/kappa) * sin(2 pi nu_RF t + phi) with
nu_RF = nu_transition - detuning; kappa is the linear amplitude-to-Rabi
calibration constant.  The carrier phase reference is absolute time zero
of the sequence, so concatenated segments are phase coherent by
construction.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .spin_model import QuditSpec


@dataclass(frozen=True)
class AwgConfig:
    sample_rate_gsps: float = 24.0
    kappa_mhz_per_unit: float = 10.0

    def __post_init__(self):
        if self.sample_rate_gsps <= 0:
            raise ValueError("sample_rate_gsps must be > 0")
        if self.kappa_mhz_per_unit <= 0:
            raise ValueError("kappa_mhz_per_unit must be > 0")


@dataclass(frozen=True)
class WaveformSamples:
    samples: np.ndarray = field(repr=False)
    sample_rate_gsps: float
    duration_ns: float

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        expected = int(round(self.sample_rate_gsps * self.duration_ns))
        if s.size != expected:
            raise ValueError(f"expected {expected} samples, got {s.size}")
        if s.size and np.max(np.abs(s)) > 1.0 + 1e-12:
            raise ValueError("samples exceed full scale [-1, 1]")


def synthesize(sequence, qudit: QuditSpec, awg: AwgConfig) -> WaveformSamples:
    """Sample stream for a segment sequence against absolute time.

    Raises on Nyquist violation (any tone at or above half the sample
    rate) and on amplitude overflow (sum of Omega/kappa above full scale);
    clipping is never silent.
    """
    segments = list(sequence)
    rate_gsps = awg.sample_rate_gsps
    total_ns = sum(seg.duration_ns for seg in segments)
    n_total = int(round(rate_gsps * total_ns))
    out = np.zeros(n_total)
    start = 0
    t_offset_ns = 0.0
    for seg in segments:
        n_seg = int(round(rate_gsps * (t_offset_ns + seg.duration_ns))) - start
        t_ns = (start + np.arange(n_seg)) / rate_gsps
        amp_sum = 0.0
        for tone in seg.tones:
            if tone.transition > qudit.n_levels - 1:
                raise ValueError(
                    f"transition {tone.transition} out of range for qudit"
                )
            nu_rf_ghz = (
                qudit.transition_freqs_ghz[tone.transition - 1]
                - tone.detuning_mhz / 1000.0
            )
            if nu_rf_ghz >= rate_gsps / 2.0:
                raise ValueError(
                    f"Nyquist violation: tone at {nu_rf_ghz} GHz with "
                    f"{rate_gsps} GS/s sampling"
                )
            amp = tone.rabi_mhz / awg.kappa_mhz_per_unit
            amp_sum += amp
            out[start:start + n_seg] += amp * np.sin(
                2.0 * np.pi * nu_rf_ghz * t_ns + tone.phase_rad
            )
        if amp_sum > 1.0 + 1e-12:
            raise ValueError(
                f"amplitude overflow: sum of Omega/kappa = {amp_sum:.6g} > 1"
            )
        start += n_seg
        t_offset_ns += seg.duration_ns
    return WaveformSamples(
        samples=out, sample_rate_gsps=rate_gsps, duration_ns=total_ns
    )


def export_waveform(w: WaveformSamples, path, format: str = "csv") -> None:
    """Write samples as csv (one per line, 9 significant digits) or raw
    little-endian float32 with no header."""
    if format == "csv":
        try:
            np.savetxt(path, w.samples, fmt="%.9g")
        except OSError as e:
            raise OSError(f"failed to write waveform csv to {path}: {e}") from e
    elif format == "f32le":
        data = struct.pack(f"<{w.samples.size}f", *w.samples)
        try:
            with open(path, "wb") as f:
                f.write(data)
        except OSError as e:
            raise OSError(f"failed to write waveform f32le to {path}: {e}") from e
    else:
        raise ValueError(f"format must be 'csv' or 'f32le', got {format!r}")


def tone_amplitude(w: WaveformSamples, freq_ghz: float) -> float:
    """Amplitude of the component at ``freq_ghz`` by direct projection.

    Rectangular window; the negative-frequency image leaks at the
    1/(pi * 2 * freq * duration) level, far below 1% for GHz tones over
    100+ ns records.
    """
    t_ns = np.arange(w.samples.size) / w.sample_rate_gsps
    z = np.sum(w.samples * np.exp(-2j * np.pi * freq_ghz * t_ns))
    return 2.0 * np.abs(z) / w.samples.size
