import struct

import numpy as np
import pytest

from quditpulse.hamiltonian import DriveTone, SegmentSpec
from quditpulse.spin_model import default_tb_qudit
from quditpulse.waveform import (
    AwgConfig,
    WaveformSamples,
    export_waveform,
    synthesize,
    tone_amplitude,
)

QUDIT = default_tb_qudit()
AWG = AwgConfig()


def single_tone(duration_ns=140.0, rabi=3.1, detuning=0.0, transition=2):
    seg = SegmentSpec(
        (DriveTone(transition, rabi, detuning_mhz=detuning),), duration_ns
    )
    return synthesize([seg], QUDIT, AWG)


class TestSynthesize:
    def test_sample_count(self):
        wave = single_tone(140.0)
        assert wave.samples.size == 3360  # 140 ns * 24 GS/s

    def test_single_tone_frequency_and_amplitude(self):
        wave = single_tone()
        nu = QUDIT.transition_freqs_ghz[1]
        spectrum = np.abs(np.fft.rfft(wave.samples))
        peak_bin = int(np.argmax(spectrum))
        expected_bin = round(nu * wave.duration_ns)
        assert abs(peak_bin - expected_bin) <= 1
        assert tone_amplitude(wave, nu) == pytest.approx(0.31, rel=0.01)

    def test_detuning_shifts_the_carrier_down(self):
        det = 50.0  # MHz, exaggerated so the DFT bins separate
        wave = single_tone(duration_ns=400.0, detuning=det)
        nu_rf = QUDIT.transition_freqs_ghz[1] - det / 1000.0
        assert tone_amplitude(wave, nu_rf) == pytest.approx(0.31, rel=0.01)
        assert tone_amplitude(wave, QUDIT.transition_freqs_ghz[1]) < 0.02

    def test_multitone_superposes_linearly(self):
        seg = SegmentSpec(
            (DriveTone(1, 2.1), DriveTone(2, 4.2), DriveTone(3, 3.1)), 140.0
        )
        wave = synthesize([seg], QUDIT, AWG)
        for nu, rabi in zip(QUDIT.transition_freqs_ghz, (2.1, 4.2, 3.1)):
            assert tone_amplitude(wave, nu) == pytest.approx(
                rabi / AWG.kappa_mhz_per_unit, rel=0.01
            )

    def test_segments_are_phase_coherent(self):
        # one long tone must equal the same tone split into two segments
        seg = SegmentSpec((DriveTone(2, 3.1),), 100.0)
        a = SegmentSpec(seg.tones, 60.0)
        b = SegmentSpec(seg.tones, 40.0)
        whole = synthesize([seg], QUDIT, AWG)
        split = synthesize([a, b], QUDIT, AWG)
        np.testing.assert_allclose(split.samples, whole.samples, atol=1e-12)

    def test_amplitude_overflow_is_an_error(self):
        seg = SegmentSpec((DriveTone(1, 11.0),), 10.0)  # Omega/kappa > 1
        with pytest.raises(ValueError, match="overflow"):
            synthesize([seg], QUDIT, AWG)

    def test_nyquist_violation_is_an_error(self):
        slow = AwgConfig(sample_rate_gsps=4.0)
        seg = SegmentSpec((DriveTone(2, 3.1),), 10.0)  # 3.128 GHz > 2 GHz
        with pytest.raises(ValueError, match="Nyquist"):
            synthesize([seg], QUDIT, slow)


class TestWaveformSamples:
    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            WaveformSamples(samples=np.zeros(100), sample_rate_gsps=24.0,
                            duration_ns=10.0)

    def test_clipping_rejected(self):
        n = int(24.0 * 10.0)
        with pytest.raises(ValueError):
            WaveformSamples(samples=np.full(n, 1.5), sample_rate_gsps=24.0,
                            duration_ns=10.0)


class TestExport:
    def test_csv_round_trip(self, tmp_path):
        wave = single_tone(10.0)
        path = tmp_path / "wave.csv"
        export_waveform(wave, path)
        back = np.loadtxt(path)
        np.testing.assert_allclose(back, wave.samples, atol=1e-8)

    def test_f32le_round_trip(self, tmp_path):
        wave = single_tone(10.0)
        path = tmp_path / "wave.f32le"
        export_waveform(wave, path, format="f32le")
        raw = path.read_bytes()
        assert len(raw) == 4 * wave.samples.size
        back = np.array(struct.unpack(f"<{wave.samples.size}f", raw))
        np.testing.assert_allclose(back, wave.samples, atol=1e-6)

    def test_unknown_format_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            export_waveform(single_tone(10.0), tmp_path / "w", format="wav")

    def test_unwritable_path_raises_oserror(self, tmp_path):
        with pytest.raises(OSError):
            export_waveform(single_tone(10.0), tmp_path / "no" / "dir" / "w.csv")
