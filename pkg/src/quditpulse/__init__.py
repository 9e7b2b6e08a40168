"""quditpulse: pulse design and simulation for multi-level spin qudits."""

from .spin_model import (
    LevelModel,
    QuditSpec,
    default_tb_qudit,
    fit_level_model,
    transition_frequencies,
)
from .hamiltonian import (
    DriveTone,
    FrameHamiltonian,
    SegmentSpec,
    build_qubit_hamiltonian,
    build_qudit_hamiltonian,
    frame_offsets,
)
from .evolution import (
    PopulationTrace,
    basis_state,
    evolve_sequence,
    population_trace,
    propagate,
    propagator,
    relative_phases,
)
from .gates import (
    GroverPlan,
    HadamardBounds,
    HadamardSolution,
    find_hadamard,
    grover_detuning,
    grover_period,
    plan_grover,
    resonance_residual,
    selection_tones,
    superposition_objective,
)
from .sampling import (
    CycleConfig,
    TransitionCounts,
    detuning_map,
    probability_matrix,
    run_cycles,
    transition_probability,
    visibility,
)
from .waveform import AwgConfig, WaveformSamples, export_waveform, synthesize

__version__ = "0.1.0"

__all__ = [
    "AwgConfig",
    "CycleConfig",
    "DriveTone",
    "FrameHamiltonian",
    "GroverPlan",
    "HadamardBounds",
    "HadamardSolution",
    "LevelModel",
    "PopulationTrace",
    "QuditSpec",
    "SegmentSpec",
    "TransitionCounts",
    "WaveformSamples",
    "basis_state",
    "build_qubit_hamiltonian",
    "build_qudit_hamiltonian",
    "default_tb_qudit",
    "detuning_map",
    "evolve_sequence",
    "export_waveform",
    "find_hadamard",
    "fit_level_model",
    "frame_offsets",
    "grover_detuning",
    "grover_period",
    "plan_grover",
    "population_trace",
    "probability_matrix",
    "propagate",
    "propagator",
    "relative_phases",
    "resonance_residual",
    "run_cycles",
    "selection_tones",
    "superposition_objective",
    "synthesize",
    "transition_frequencies",
    "transition_probability",
    "visibility",
]
