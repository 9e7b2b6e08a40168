import numpy as np
import pytest

from quditpulse.gates import HadamardBounds, find_hadamard, plan_grover
from quditpulse.hamiltonian import DriveTone, SegmentSpec
from quditpulse.sampling import (
    CycleConfig,
    TransitionCounts,
    detuning_map,
    grover_map_grids,
    map_to_csv,
    probability_matrix,
    run_cycles,
    transition_probability,
    visibility,
)

PI_PULSE = SegmentSpec((DriveTone(2, 3.1),), 1000.0 / (2 * 3.1))


class TestCycleConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            CycleConfig(shots=0)
        with pytest.raises(ValueError):
            CycleConfig(detection_prob=0.0)
        with pytest.raises(ValueError):
            CycleConfig(quasistatic_detuning_sigma_mhz=-1.0)


class TestRunCycles:
    def test_identity_sequence(self):
        counts = run_cycles([], 1, 4, CycleConfig(shots=500, seed=0))
        assert counts.counts[1, 1] == 500
        assert counts.counts.sum() == 500
        assert counts.attempted == 500

    def test_pi_pulse_full_transfer(self):
        counts = run_cycles([PI_PULSE], 1, 4, CycleConfig(shots=500, seed=0))
        assert counts.counts[1, 2] == 500

    def test_deterministic_given_seed(self):
        seg = SegmentSpec((DriveTone(2, 3.1),), 80.0)
        a = run_cycles([seg], 1, 4, CycleConfig(shots=300, seed=42))
        b = run_cycles([seg], 1, 4, CycleConfig(shots=300, seed=42))
        np.testing.assert_array_equal(a.counts, b.counts)
        assert a.attempted == b.attempted

    def test_rejection_counts_attempts_only(self):
        counts = run_cycles([], 0, 2,
                            CycleConfig(shots=400, seed=1, detection_prob=0.5))
        assert counts.counts.sum() == 400
        assert counts.attempted > 400

    def test_quasistatic_noise_spreads_outcomes(self):
        # a pi pulse under strong slow detuning noise no longer transfers
        # every shot
        config = CycleConfig(shots=300, seed=3,
                             quasistatic_detuning_sigma_mhz=3.0)
        counts = run_cycles([PI_PULSE], 1, 4, config)
        assert counts.counts[1, 2] < 300
        assert counts.counts.sum() == 300


class TestCountsAndProbabilities:
    def test_row_sums_equal_one_exactly(self):
        counts = run_cycles([PI_PULSE], 1, 4, CycleConfig(shots=250, seed=5))
        p = probability_matrix(counts)
        assert p[1].sum() == 1.0

    def test_empty_rows_are_nan(self):
        counts = run_cycles([], 0, 3, CycleConfig(shots=10, seed=0))
        p = probability_matrix(counts)
        assert np.isnan(p[1]).all()
        with pytest.raises(ValueError):
            transition_probability(counts, 1, 0)

    def test_merge(self):
        a = run_cycles([], 0, 2, CycleConfig(shots=100, seed=0))
        b = run_cycles([], 1, 2, CycleConfig(shots=50, seed=1))
        merged = a.merge(b)
        assert merged.counts[0, 0] == 100 and merged.counts[1, 1] == 50
        assert merged.attempted == 150

    def test_counts_csv(self, tmp_path):
        counts = TransitionCounts(counts=np.array([[3, 1], [0, 4]]),
                                  attempted=10)
        path = tmp_path / "counts.csv"
        counts.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "# attempted=10"
        assert lines[1] == "3,1"

    def test_visibility_modes(self):
        p = np.array([[0.2, 0.8], [0.3, 0.7]])
        assert visibility(p, 0, 1) == pytest.approx(0.8)
        assert visibility(p, 0, 1, mode="symmetric") == pytest.approx(1.1)
        with pytest.raises(ValueError):
            visibility(p, 0, 1, mode="other")


def small_plan():
    sol = find_hadamard(
        4, 1, [0, 1, 2],
        bounds=HadamardBounds(rabi_mhz=1.9, detuning_mhz=[1.9, 0.0],
                              duration_ns=(5.0, 500.0)),
        phase_weight=0.0,
    )
    return sol, plan_grover(2, sol, 4)


class TestDetuningMap:
    def test_design_point_recovers_peak_population(self):
        sol, plan = small_plan()
        design = {t.transition: t.detuning_mhz
                  for t in plan.selection_segment.tones}
        values = detuning_map(
            sol.segment, plan.selection_segment,
            [design[1]], [design[2]],
            duration_ns=plan.measured_half_period_ns,
            searched_level=2, initial_level=1, n_levels=4,
        )
        assert values.shape == (1, 1)
        assert values[0, 0] == pytest.approx(plan.predicted_peak_population,
                                             abs=1e-9)

    def test_workers_do_not_change_results(self):
        sol, plan = small_plan()
        d1, d2 = np.array([-0.4, 0.0, 0.4]), np.array([1.5, 1.9, 2.3])
        kwargs = dict(duration_ns=plan.measured_half_period_ns,
                      searched_level=2, initial_level=1, n_levels=4)
        serial = detuning_map(sol.segment, plan.selection_segment, d1, d2,
                              **kwargs)
        parallel = detuning_map(sol.segment, plan.selection_segment, d1, d2,
                                workers=4, **kwargs)
        np.testing.assert_array_equal(serial, parallel)

    def test_monte_carlo_map_deterministic(self):
        sol, plan = small_plan()
        config = CycleConfig(shots=50, seed=9)
        kwargs = dict(duration_ns=plan.measured_half_period_ns,
                      searched_level=2, initial_level=1, n_levels=4,
                      config=config)
        a = detuning_map(sol.segment, plan.selection_segment, [0.0], [1.9],
                         **kwargs)
        b = detuning_map(sol.segment, plan.selection_segment, [0.0], [1.9],
                         **kwargs)
        np.testing.assert_array_equal(a, b)

    def test_map_grids_are_centred_on_design_point(self):
        _, plan = small_plan()
        d1, d2 = grover_map_grids(plan, span_mhz=4.0, step_mhz=0.2)
        design = {t.transition: t.detuning_mhz
                  for t in plan.selection_segment.tones}
        assert np.min(np.abs(d1 - design[1])) < 1e-9
        assert np.min(np.abs(d2 - design[2])) < 1e-9
        assert d1.size == d2.size == 41

    def test_map_csv_layout(self, tmp_path):
        values = np.array([[0.1, 0.2], [0.3, 0.4]])
        path = tmp_path / "map.csv"
        map_to_csv(values, [-0.2, 0.0], [1.7, 1.9], path)
        lines = path.read_text().splitlines()
        assert lines[0] == "delta1_mhz,1.7,1.9"
        assert lines[1].startswith("-0.2,")
