"""Rotating-frame Hamiltonians for multichromatic square-pulse drives.

Conventions
-----------
All matrices M are in MHz with the physical Hamiltonian H = pi * hbar * M,
so a resonant two-level drive gives population oscillation at exactly the
Rabi frequency:  P1(t) = sin^2(pi * Omega * t).  Time is microseconds
internally (MHz * us is dimensionless), nanoseconds at API boundaries.

Under the rotating-wave approximation a drive with one tone per transition
becomes time independent.  The matrix is tridiagonal (nearest-neighbour
selection rule):

    off-diagonal (k-1, k) = Omega_k * exp(i * phi_k)
    diagonal      (k, k)  = 2 * delta_k     (0 if transition k is undriven)

i.e. each driven level carries twice the detuning of its own transition's
tone, and level 0 is the frame anchor at energy 0.  With this diagonal the
self-consistent detuning conditions for resonant state selection come out
exactly as the closed forms used by the gate-design module (for three
states, delta_s = (Omega_1 + Omega_2 + delta_1 + delta_2) / 3).  The tone
detunings are therefore per-level frame offsets: the frame rotates level k
at nu_k - delta_k relative to level k-1, and the drive frequency of
transition k in the fixed transition-frequency frame is
delta_k - delta_{k-1}.  ``frame_offsets`` returns those per-level offsets
for inter-segment phase realignment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HERMITICITY_TOL_MHZ = 1e-12


@dataclass(frozen=True)
class DriveTone:
    """One spectral component of a multichromatic segment.

    transition: 1-based index n; the tone drives the (n-1) <-> n transition.
    """

    transition: int
    rabi_mhz: float
    detuning_mhz: float = 0.0
    phase_rad: float = 0.0

    def __post_init__(self):
        if self.transition < 1:
            raise ValueError(f"transition index must be >= 1, got {self.transition}")
        if self.rabi_mhz < 0:
            raise ValueError("rabi_mhz must be >= 0 (absorb sign into phase)")

    def to_json_dict(self) -> dict:
        return {
            "transition": self.transition,
            "rabi_mhz": self.rabi_mhz,
            "detuning_mhz": self.detuning_mhz,
            "phase_rad": self.phase_rad,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "DriveTone":
        return cls(
            transition=int(d["transition"]),
            rabi_mhz=float(d["rabi_mhz"]),
            detuning_mhz=float(d.get("detuning_mhz", 0.0)),
            phase_rad=float(d.get("phase_rad", 0.0)),
        )


@dataclass(frozen=True)
class SegmentSpec:
    """A square multichromatic pulse: one tone per driven transition."""

    tones: tuple[DriveTone, ...]
    duration_ns: float

    def __post_init__(self):
        if not np.isfinite(self.duration_ns) or self.duration_ns < 0:
            raise ValueError("duration_ns must be finite and >= 0")
        idx = [t.transition for t in self.tones]
        if len(idx) != len(set(idx)):
            raise ValueError(f"duplicate transition indices in segment: {sorted(idx)}")
        object.__setattr__(self, "tones", tuple(self.tones))

    def to_json_dict(self) -> dict:
        return {
            "tones": [t.to_json_dict() for t in self.tones],
            "duration_ns": self.duration_ns,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "SegmentSpec":
        return cls(
            tones=tuple(DriveTone.from_json_dict(t) for t in d["tones"]),
            duration_ns=float(d["duration_ns"]),
        )


@dataclass(frozen=True)
class FrameHamiltonian:
    """N x N Hermitian tridiagonal matrix in MHz; H = pi * hbar * matrix."""

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
            raise ValueError(f"matrix must be square with N >= 2, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL_MHZ:
            raise ValueError("matrix is not Hermitian")
        beyond = np.triu(m, 2)
        if np.any(beyond != 0):
            raise ValueError("matrix must be tridiagonal (nearest-neighbour rule)")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n_levels(self) -> int:
        return self.matrix.shape[0]


def build_qubit_hamiltonian(rabi_mhz: float, detuning_mhz: float) -> FrameHamiltonian:
    """Two-level rotating-frame Hamiltonian, traceless convention.

    matrix = [[delta, Omega], [Omega, -delta]].  This differs from the
    2-level restriction of ``build_qudit_hamiltonian`` by the uniform shift
    -delta * I, a global phase under evolution.
    """
    if rabi_mhz < 0:
        raise ValueError("rabi_mhz must be >= 0")
    d, o = detuning_mhz, rabi_mhz
    return FrameHamiltonian(np.array([[d, o], [o, -d]], dtype=complex))


def build_qudit_hamiltonian(tones, n_levels: int) -> FrameHamiltonian:
    """Multi-level rotating-frame Hamiltonian for one tone per transition."""
    if n_levels < 2:
        raise ValueError("n_levels must be >= 2")
    m = np.zeros((n_levels, n_levels), dtype=complex)
    seen = set()
    for tone in tones:
        k = tone.transition
        if k >= n_levels:
            raise ValueError(
                f"transition {k} out of range for {n_levels} levels"
            )
        if k in seen:
            raise ValueError(f"duplicate tone for transition {k}")
        seen.add(k)
        coupling = tone.rabi_mhz * np.exp(1j * tone.phase_rad)
        m[k - 1, k] = coupling
        m[k, k - 1] = np.conj(coupling)
        m[k, k] = 2.0 * tone.detuning_mhz
    return FrameHamiltonian(m)


def segment_hamiltonian(segment: SegmentSpec, n_levels: int) -> FrameHamiltonian:
    return build_qudit_hamiltonian(segment.tones, n_levels)


def frame_offsets(tones, n_levels: int) -> np.ndarray:
    """Per-level rotating-frame offsets D_k (MHz) relative to the fixed
    transition-frequency frame.

    D_0 = 0; D_k is the detuning of the tone driving transition k (0 if
    undriven).  The propagator uses differences of these across segment
    boundaries to keep the state continuous in the fixed frame when drive
    frequencies change.
    """
    if n_levels < 2:
        raise ValueError("n_levels must be >= 2")
    d = np.zeros(n_levels)
    for tone in tones:
        if tone.transition >= n_levels:
            raise ValueError(
                f"transition {tone.transition} out of range for {n_levels} levels"
            )
        d[tone.transition] = tone.detuning_mhz
    return d
