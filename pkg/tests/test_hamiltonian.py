import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quditpulse.hamiltonian import (
    DriveTone,
    FrameHamiltonian,
    SegmentSpec,
    build_qubit_hamiltonian,
    build_qudit_hamiltonian,
    frame_offsets,
    segment_hamiltonian,
)


@st.composite
def tone_sets(draw, max_levels=6):
    """Strategy: (n_levels, tones) with distinct transitions."""
    n_levels = draw(st.integers(2, max_levels))
    k = draw(st.integers(0, n_levels - 1))
    transitions = draw(st.permutations(list(range(1, n_levels))))[:k]
    tones = tuple(
        DriveTone(
            transition=tr,
            rabi_mhz=draw(st.floats(0.0, 10.0)),
            detuning_mhz=draw(st.floats(-10.0, 10.0)),
            phase_rad=draw(st.floats(-np.pi, np.pi)),
        )
        for tr in transitions
    )
    return n_levels, tones


class TestDriveTone:
    def test_negative_rabi_rejected(self):
        with pytest.raises(ValueError):
            DriveTone(transition=1, rabi_mhz=-0.1)

    def test_transition_index_is_one_based(self):
        with pytest.raises(ValueError):
            DriveTone(transition=0, rabi_mhz=1.0)

    def test_json_round_trip(self):
        tone = DriveTone(transition=2, rabi_mhz=3.1, detuning_mhz=-1.5,
                         phase_rad=0.7)
        assert DriveTone.from_json_dict(tone.to_json_dict()) == tone


class TestSegmentSpec:
    def test_duplicate_transitions_rejected(self):
        tones = (DriveTone(1, 1.0), DriveTone(1, 2.0))
        with pytest.raises(ValueError):
            SegmentSpec(tones=tones, duration_ns=10.0)

    def test_negative_duration_rejected(self):
        with pytest.raises(ValueError):
            SegmentSpec(tones=(), duration_ns=-1.0)

    def test_json_round_trip(self):
        seg = SegmentSpec(
            tones=(DriveTone(1, 2.1), DriveTone(3, 3.1, detuning_mhz=4.9)),
            duration_ns=140.0,
        )
        assert SegmentSpec.from_json_dict(seg.to_json_dict()) == seg


class TestBuildQuditHamiltonian:
    @settings(max_examples=200, deadline=None)
    @given(tone_sets())
    def test_structure_properties(self, case):
        n_levels, tones = case
        h = build_qudit_hamiltonian(tones, n_levels)
        m = h.matrix
        # Hermitian and tridiagonal
        np.testing.assert_allclose(m, m.conj().T, atol=1e-14)
        assert np.all(np.triu(m, 2) == 0)
        # each driven level carries twice its tone's detuning; couplings
        # have the tone's Rabi magnitude and phase
        expected_diag = np.zeros(n_levels)
        for tone in tones:
            expected_diag[tone.transition] = 2.0 * tone.detuning_mhz
            c = m[tone.transition - 1, tone.transition]
            assert abs(c) == pytest.approx(tone.rabi_mhz, abs=1e-12)
            if tone.rabi_mhz > 1e-9:
                assert np.angle(c) == pytest.approx(tone.phase_rad, abs=1e-9)
        np.testing.assert_allclose(np.diag(m).real, expected_diag, atol=1e-12)

    def test_undriven_transitions_are_zero(self):
        h = build_qudit_hamiltonian((DriveTone(2, 3.1, detuning_mhz=1.0),), 4)
        m = h.matrix
        assert m[0, 1] == 0 and m[2, 3] == 0
        np.testing.assert_allclose(np.diag(m).real, [0, 0, 2.0, 0])

    def test_transition_out_of_range(self):
        with pytest.raises(ValueError):
            build_qudit_hamiltonian((DriveTone(4, 1.0),), 4)

    def test_duplicate_tones_rejected(self):
        with pytest.raises(ValueError):
            build_qudit_hamiltonian((DriveTone(1, 1.0), DriveTone(1, 2.0)), 3)


class TestQubitHamiltonian:
    def test_traceless_form(self):
        m = build_qubit_hamiltonian(3.1, 1.2).matrix
        np.testing.assert_allclose(m, [[1.2, 3.1], [3.1, -1.2]])

    def test_population_dynamics_match_qudit_form(self):
        # the traceless and zero-anchored conventions differ by a uniform
        # shift and a detuning-sign flip, neither of which affects
        # populations
        delta, rabi = 1.7, 3.1
        h2 = build_qubit_hamiltonian(rabi, delta)
        hq = build_qudit_hamiltonian((DriveTone(1, rabi, detuning_mhz=delta),),
                                     2)
        from quditpulse.evolution import basis_state, propagate

        for t_ns in (37.0, 161.3, 420.0):
            p2 = np.abs(propagate(h2, basis_state(2, 0), t_ns)) ** 2
            pq = np.abs(propagate(hq, basis_state(2, 0), t_ns)) ** 2
            np.testing.assert_allclose(p2, pq, atol=1e-12)


class TestFrameHamiltonian:
    def test_non_hermitian_rejected(self):
        with pytest.raises(ValueError):
            FrameHamiltonian(np.array([[0.0, 1.0], [2.0, 0.0]]))

    def test_beyond_tridiagonal_rejected(self):
        m = np.zeros((3, 3))
        m[0, 2] = m[2, 0] = 1.0
        with pytest.raises(ValueError):
            FrameHamiltonian(m)


class TestFrameOffsets:
    def test_per_level_offsets(self):
        tones = (DriveTone(1, 1.0, detuning_mhz=2.5),
                 DriveTone(3, 1.0, detuning_mhz=-1.0))
        np.testing.assert_allclose(frame_offsets(tones, 4), [0.0, 2.5, 0.0, -1.0])

    def test_anchor_level_is_zero(self):
        assert frame_offsets((), 3)[0] == 0.0

    def test_matches_segment_diagonal(self):
        tones = (DriveTone(1, 1.0, detuning_mhz=2.5),
                 DriveTone(2, 2.0, detuning_mhz=-0.5))
        seg = SegmentSpec(tones=tones, duration_ns=10.0)
        m = segment_hamiltonian(seg, 3).matrix
        np.testing.assert_allclose(2.0 * frame_offsets(tones, 3), np.diag(m).real)
