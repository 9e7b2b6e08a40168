"""Exact unitary evolution under rotating-frame Hamiltonians.

The matrices are small (N <= ~10) and Hermitian, so the propagator is
computed by spectral decomposition: U(t) = V exp(-i pi w t) V^dagger with
(w, V) the eigensystem of the MHz matrix and t in microseconds.  This is
exact, needs no step-size tuning, and preserves unitarity to machine
precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hamiltonian import FrameHamiltonian, SegmentSpec, frame_offsets, segment_hamiltonian

NS_PER_US = 1000.0
NORM_TOL = 1e-10
PHASE_REF_MIN_AMP = 1e-12


def basis_state(n_levels: int, level: int) -> np.ndarray:
    if not 0 <= level < n_levels:
        raise ValueError(f"level {level} out of range for {n_levels} levels")
    state = np.zeros(n_levels, dtype=complex)
    state[level] = 1.0
    return state


def check_state(state: np.ndarray, n_levels: int | None = None) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.ndim != 1:
        raise ValueError("state must be a 1-d amplitude vector")
    if n_levels is not None and state.size != n_levels:
        raise ValueError(f"state has {state.size} amplitudes, expected {n_levels}")
    if abs(np.vdot(state, state).real - 1.0) > NORM_TOL:
        raise ValueError("state is not normalized")
    return state


def propagator(h: FrameHamiltonian, t_ns: float) -> np.ndarray:
    """U = exp(-i * pi * M * t) for M in MHz and t converted to us."""
    if t_ns < 0:
        raise ValueError("t_ns must be >= 0")
    w, v = np.linalg.eigh(h.matrix)
    phase = np.exp(-1j * np.pi * w * (t_ns / NS_PER_US))
    return (v * phase) @ v.conj().T


def propagate(h: FrameHamiltonian, state: np.ndarray, t_ns: float) -> np.ndarray:
    state = check_state(state, h.n_levels)
    return propagator(h, t_ns) @ state


def relative_phases(state: np.ndarray) -> np.ndarray:
    """Phases with the first amplitude above PHASE_REF_MIN_AMP as gauge zero."""
    state = np.asarray(state, dtype=complex)
    above = np.nonzero(np.abs(state) >= PHASE_REF_MIN_AMP)[0]
    ref = np.angle(state[above[0]]) if above.size else 0.0
    return np.angle(state * np.exp(-1j * ref))


def boundary_realignment(
    old_offsets_mhz: np.ndarray, new_offsets_mhz: np.ndarray, t_boundary_ns: float
) -> np.ndarray:
    """Diagonal phases mapping a state from one segment's frame to the next.

    Both segment frames rotate level k at nu_k - D_k relative to the fixed
    transition-frequency frame; continuity of the fixed-frame state at the
    boundary gives the factor exp(-i 2 pi (D_new - D_old) t_boundary).
    """
    dt = t_boundary_ns / NS_PER_US
    return np.exp(-2j * np.pi * (new_offsets_mhz - old_offsets_mhz) * dt)


def evolve_sequence(segments, initial: np.ndarray, frame: str = "segment") -> np.ndarray:
    """Apply segments in order with frame realignment at every boundary.

    The state is carried in each segment's own rotating frame; whenever the
    drive frequencies change the amplitudes are realigned so that the state
    is continuous in the fixed transition-frequency frame.  ``frame`` selects
    the frame of the returned state: "segment" (the last segment's frame,
    default) or "fixed" (the transition-frequency frame).
    """
    if frame not in ("segment", "fixed"):
        raise ValueError(f"unknown frame {frame!r}")
    state = check_state(initial)
    n = state.size
    offsets = np.zeros(n)
    t_elapsed_ns = 0.0
    for seg in segments:
        new_offsets = frame_offsets(seg.tones, n)
        state = boundary_realignment(offsets, new_offsets, t_elapsed_ns) * state
        offsets = new_offsets
        h = segment_hamiltonian(seg, n)
        state = propagator(h, seg.duration_ns) @ state
        t_elapsed_ns += seg.duration_ns
    if frame == "fixed":
        state = boundary_realignment(offsets, np.zeros(n), t_elapsed_ns) * state
    return state


@dataclass(frozen=True)
class PopulationTrace:
    """Populations and relative phases on a time grid (one row per time)."""

    times_ns: np.ndarray = field(repr=False)
    populations: np.ndarray = field(repr=False)
    phases_rad: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.times_ns, dtype=float)
        if t.size == 0 or np.any(np.diff(t) <= 0):
            raise ValueError("times_ns must be non-empty and strictly increasing")
        p = np.asarray(self.populations, dtype=float)
        if np.max(np.abs(p.sum(axis=1) - 1.0)) > NORM_TOL:
            raise ValueError("population rows must sum to 1")

    @property
    def n_levels(self) -> int:
        return self.populations.shape[1]

    def to_csv(self, path) -> None:
        n = self.n_levels
        header = (
            "t_ns,"
            + ",".join(f"p{k}" for k in range(n))
            + ","
            + ",".join(f"phi{k}" for k in range(n))
        )
        rows = np.column_stack([self.times_ns, self.populations, self.phases_rad])
        np.savetxt(path, rows, fmt="%.12g", delimiter=",", header=header, comments="")


def population_trace(
    segment: SegmentSpec, initial: np.ndarray, t_grid_ns
) -> PopulationTrace:
    """Populations |c_k(t)|^2 and relative phases along one segment.

    The grid may extend past the segment duration; the segment Hamiltonian
    keeps acting (square pulse of unbounded length for scanning purposes).
    """
    t = np.asarray(t_grid_ns, dtype=float)
    if t.size == 0 or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid_ns must be non-empty, sorted and duplicate-free")
    state = check_state(initial)
    h = segment_hamiltonian(segment, state.size)
    w, v = np.linalg.eigh(h.matrix)
    coeff = v.conj().T @ state
    # states over the whole grid in one shot: (n_t, N)
    phases = np.exp(-1j * np.pi * np.outer(t / NS_PER_US, w))
    states = (phases * coeff) @ v.T
    pops = np.abs(states) ** 2
    rel = np.array([relative_phases(s) for s in states])
    return PopulationTrace(times_ns=t, populations=pops, phases_rad=rel)
