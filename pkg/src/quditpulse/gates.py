"""Pulse-parameter design: multi-level Hadamard search and resonant state
selection.

The Hadamard search minimizes a population-plus-phase variance objective
over the (2K-1)-dimensional drive parameter space of a K-level band (K-1
Rabi rates, K-1 detunings, one duration).  State selection applies a
detuning that puts the searched level's diagonal energy at the mean matrix
element of the driven band, which makes the population oscillate between
the uniform superposition and the searched state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.signal import argrelmax

from .evolution import (
    NS_PER_US,
    basis_state,
    boundary_realignment,
    check_state,
    propagator,
    relative_phases,
)
from .hamiltonian import DriveTone, SegmentSpec, frame_offsets, segment_hamiltonian

DEFAULT_RESIDUAL_THRESHOLD = 1e-3
RESONANCE_TOL_MHZ = 1e-9
# Optima whose residual is within this of the best are treated as ties and
# broken by preferring the shortest pulse (shorter pulses lose less
# coherence; this also keeps the search reproducible across refactors).
TIE_TOL = 1e-8
MAX_GRID_SAMPLES = 500_000


def superposition_objective(state, target_levels, phase_weight: float = 1.0) -> float:
    """Population variance plus weighted circular phase variance over targets.

    Zero iff the target levels share equal population and equal phase (up
    to the irrelevant global phase).  The circular variance
    1 - |mean of unit phasors| is global-phase invariant by construction.
    """
    state = np.asarray(state, dtype=complex)
    targets = np.asarray(sorted(target_levels), dtype=int)
    if targets.size == 0:
        raise ValueError("target_levels must be non-empty")
    amps = state[targets]
    pops = np.abs(amps) ** 2
    j = float(np.var(pops))
    if phase_weight != 0.0:
        phasors = np.exp(1j * np.angle(amps))
        j += phase_weight * float(1.0 - np.abs(np.mean(phasors)))
    return j


def _band_transitions(target_levels) -> list[int]:
    levels = sorted(target_levels)
    if levels != list(range(levels[0], levels[-1] + 1)):
        raise ValueError(f"target_levels must be contiguous, got {levels}")
    return list(range(levels[0] + 1, levels[-1] + 1))


@dataclass(frozen=True)
class HadamardBounds:
    """Search box for the Hadamard parameters.

    Each entry is either a (low, high) interval or a plain float pinning
    the parameter; ``rabi_mhz`` and ``detuning_mhz`` may also be sequences
    with one entry per driven transition.
    """

    rabi_mhz: object = (0.5, 8.0)
    detuning_mhz: object = (-8.0, 8.0)
    duration_ns: object = (1.0, 500.0)


def _per_transition(spec, n_transitions: int) -> list:
    if isinstance(spec, (int, float)):
        return [float(spec)] * n_transitions
    spec = list(spec) if not isinstance(spec, tuple) or len(spec) != 2 else spec
    if isinstance(spec, tuple):
        return [spec] * n_transitions
    if len(spec) != n_transitions:
        raise ValueError(
            f"expected {n_transitions} per-transition entries, got {len(spec)}"
        )
    return [s if isinstance(s, tuple) else float(s) for s in spec]


@dataclass(frozen=True)
class HadamardSolution:
    segment: SegmentSpec
    initial_level: int
    target_levels: tuple[int, ...]
    residual: float
    achieved_populations: np.ndarray = field(repr=False)
    achieved_phases: np.ndarray = field(repr=False)
    phase_weight: float
    converged: bool

    def to_json_dict(self) -> dict:
        return {
            "segment": self.segment.to_json_dict(),
            "initial_level": self.initial_level,
            "target_levels": list(self.target_levels),
            "residual": self.residual,
            "achieved_populations": [float(p) for p in self.achieved_populations],
            "achieved_phases": [float(p) for p in self.achieved_phases],
            "phase_weight": self.phase_weight,
            "converged": self.converged,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "HadamardSolution":
        return cls(
            segment=SegmentSpec.from_json_dict(d["segment"]),
            initial_level=int(d["initial_level"]),
            target_levels=tuple(int(k) for k in d["target_levels"]),
            residual=float(d["residual"]),
            achieved_populations=np.array(d["achieved_populations"]),
            achieved_phases=np.array(d["achieved_phases"]),
            phase_weight=float(d["phase_weight"]),
            converged=bool(d["converged"]),
        )


def _objective_batch(params, n_levels, initial_level, transitions, targets, phase_weight):
    """Vectorized objective over a (B, 2T+1) parameter array."""
    params = np.atleast_2d(params)
    b, _ = params.shape
    t = len(transitions)
    mats = np.zeros((b, n_levels, n_levels), dtype=complex)
    for j, tr in enumerate(transitions):
        mats[:, tr - 1, tr] = params[:, j]
        mats[:, tr, tr - 1] = params[:, j]
        mats[:, tr, tr] = 2.0 * params[:, t + j]
    tau_us = params[:, 2 * t] / NS_PER_US
    w, v = np.linalg.eigh(mats)
    psi0 = basis_state(n_levels, initial_level)
    coeff = np.einsum("bkl,k->bl", v.conj(), psi0)
    amp = np.einsum("bkl,bl->bk", v, coeff * np.exp(-1j * np.pi * w * tau_us[:, None]))
    pops = np.abs(amp[:, targets]) ** 2
    out = np.var(pops, axis=1)
    if phase_weight != 0.0:
        phasors = np.exp(1j * np.angle(amp[:, targets]))
        out = out + phase_weight * (1.0 - np.abs(np.mean(phasors, axis=1)))
    return out


def find_hadamard(
    n_levels: int,
    initial_level: int,
    target_levels,
    bounds: HadamardBounds | None = None,
    phase_weight: float = 1.0,
    grid_points: int = 8,
    n_starts: int = 5,
    residual_threshold: float = DEFAULT_RESIDUAL_THRESHOLD,
) -> HadamardSolution:
    """Search drive parameters creating an equal superposition of the targets.

    Coarse grid over the free axes, then Nelder-Mead refinement from the
    best ``n_starts`` grid cells.  Fully deterministic.  Numerically tied
    optima (within TIE_TOL of the best residual) are broken by preferring
    the shortest pulse.  A residual above ``residual_threshold`` yields a
    solution flagged as non-converged rather than an error.
    """
    bounds = bounds or HadamardBounds()
    targets = tuple(sorted(int(k) for k in target_levels))
    if not all(0 <= k < n_levels for k in targets):
        raise ValueError("target_levels out of range")
    if not 0 <= initial_level < n_levels:
        raise ValueError("initial_level out of range")
    transitions = _band_transitions(targets)
    n_t = len(transitions)
    axes = (
        _per_transition(bounds.rabi_mhz, n_t)
        + _per_transition(bounds.detuning_mhz, n_t)
        + [bounds.duration_ns if isinstance(bounds.duration_ns, tuple) else float(bounds.duration_ns)]
    )
    # zero-width intervals are pinned parameters
    axes = [a[0] if isinstance(a, tuple) and a[0] == a[1] else a for a in axes]
    free = [i for i, a in enumerate(axes) if isinstance(a, tuple)]
    fixed = {i: a for i, a in enumerate(axes) if not isinstance(a, tuple)}

    def expand(x_free):
        x = np.empty((len(x_free), len(axes)))
        for col, val in fixed.items():
            x[:, col] = val
        for j, col in enumerate(free):
            x[:, col] = x_free[:, j]
        return x

    def batch(x_free):
        return _objective_batch(
            expand(np.atleast_2d(x_free)),
            n_levels, initial_level, transitions, targets, phase_weight,
        )

    if free:
        g = grid_points
        while g > 3 and g ** len(free) > MAX_GRID_SAMPLES:
            g -= 1
        grids = [np.linspace(axes[c][0], axes[c][1], g) for c in free]
        mesh = np.stack([m.ravel() for m in np.meshgrid(*grids, indexing="ij")], axis=1)
        scores = batch(mesh)
        order = np.argsort(scores, kind="stable")[:n_starts]
        starts = mesh[order]
        candidates = []
        for x0 in starts:
            res = minimize(
                lambda xf: float(batch(xf[None, :])[0]),
                x0,
                method="Nelder-Mead",
                bounds=[axes[c] for c in free],
                options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000,
                         "maxfev": 6000},
            )
            candidates.append((float(res.fun), res.x))
        best_res = min(c[0] for c in candidates)
        tied = [c for c in candidates if c[0] <= best_res + TIE_TOL]
        dur_col = free.index(len(axes) - 1) if (len(axes) - 1) in free else None
        if dur_col is not None:
            tied.sort(key=lambda c: c[1][dur_col])
        residual, x_best = tied[0]
        params = expand(x_best[None, :])[0]
    else:
        params = expand(np.zeros((1, 0)))[0]
        residual = float(batch(np.zeros((1, 0)))[0])

    tones = tuple(
        DriveTone(transition=tr, rabi_mhz=float(params[j]),
                  detuning_mhz=float(params[n_t + j]))
        for j, tr in enumerate(transitions)
    )
    segment = SegmentSpec(tones=tones, duration_ns=float(params[2 * n_t]))
    h = segment_hamiltonian(segment, n_levels)
    final = propagator(h, segment.duration_ns) @ basis_state(n_levels, initial_level)
    return HadamardSolution(
        segment=segment,
        initial_level=initial_level,
        target_levels=targets,
        residual=float(residual),
        achieved_populations=np.abs(final) ** 2,
        achieved_phases=relative_phases(final),
        phase_weight=phase_weight,
        converged=bool(residual <= residual_threshold),
    )


def _band_levels(tones) -> list[int]:
    levels = set()
    for t in tones:
        levels.add(t.transition - 1)
        levels.add(t.transition)
    return sorted(levels)


def resonance_residual(matrix: np.ndarray, searched_level: int, band_levels) -> float:
    """|<s|M|s> - (1/N) sum_mn <m|M|n>| over the driven band (MHz).

    Off-diagonal tone phases are a pure gauge (a diagonal conjugation of
    the matrix), so they are stripped before summing.
    """
    band = np.asarray(sorted(band_levels), dtype=int)
    sub = np.asarray(matrix)[np.ix_(band, band)]
    gauge_fixed = np.where(np.eye(len(band), dtype=bool), sub.real, np.abs(sub))
    mean_element = gauge_fixed.sum() / len(band)
    s = int(np.nonzero(band == searched_level)[0][0])
    return float(np.abs(gauge_fixed[s, s] - mean_element))


def grover_detuning(base_tones, searched_level: int, n_levels: int) -> float:
    """Detuning shift delta_s putting the searched level on resonance.

    Solves <s|M|s> = (1/N) sum <m|M|n> over the driven band for the shift
    applied to the searched level's diagonal.  When the searched level is
    the band anchor (its lowest level, which carries no tone), the same
    shift is realized by detuning every other driven level by -delta_s
    instead; either way the returned scalar is the magnitude of the shift.
    """
    tones = tuple(base_tones)
    band = _band_levels(tones)
    if searched_level not in band:
        raise ValueError(f"searched level {searched_level} is not driven")
    m0 = segment_hamiltonian(SegmentSpec(tones=tones, duration_ns=0.0), n_levels).matrix
    sub = m0[np.ix_(band, band)].real
    nb = len(band)
    s0 = sub.sum()
    m_ss = sub[band.index(searched_level), band.index(searched_level)]
    return float((s0 - nb * m_ss) / (2.0 * (nb - 1)))


def selection_tones(base_tones, searched_level: int, n_levels: int,
                    phases_rad=None) -> tuple[DriveTone, ...]:
    """Tone set realizing the resonant shift from ``grover_detuning``.

    Searched level above the band anchor: its own transition's tone carries
    delta_s, all others are resonant.  Searched level at the band anchor:
    every driven transition carries -delta_s (shifting all other levels
    down instead, since the anchor has no tone of its own).
    """
    tones = tuple(base_tones)
    band = _band_levels(tones)
    d_s = grover_detuning(tones, searched_level, n_levels)
    phases = dict(phases_rad or {})
    out = []
    for t in tones:
        if searched_level == band[0]:
            det = -d_s
        else:
            det = d_s if t.transition == searched_level else 0.0
        out.append(DriveTone(transition=t.transition, rabi_mhz=t.rabi_mhz,
                             detuning_mhz=det,
                             phase_rad=phases.get(t.transition, 0.0)))
    return tuple(out)


def grover_period(n_superposed: int, rabi_mhz: float) -> float:
    """Predicted selection half-period sqrt(N)/(4*Omega), in ns."""
    if n_superposed < 1:
        raise ValueError("n_superposed must be >= 1")
    if rabi_mhz <= 0:
        raise ValueError("rabi_mhz must be > 0")
    return math.sqrt(n_superposed) / (4.0 * rabi_mhz) * NS_PER_US


@dataclass(frozen=True)
class GroverPlan:
    searched_level: int
    hadamard: HadamardSolution
    selection_segment: SegmentSpec
    predicted_half_period_ns: float
    measured_half_period_ns: float
    predicted_peak_population: float
    resonance_residual_mhz: float

    def to_json_dict(self) -> dict:
        return {
            "searched_level": self.searched_level,
            "hadamard": self.hadamard.to_json_dict(),
            "selection_segment": self.selection_segment.to_json_dict(),
            "predicted_half_period_ns": self.predicted_half_period_ns,
            "measured_half_period_ns": self.measured_half_period_ns,
            "predicted_peak_population": self.predicted_peak_population,
            "resonance_residual_mhz": self.resonance_residual_mhz,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "GroverPlan":
        return cls(
            searched_level=int(d["searched_level"]),
            hadamard=HadamardSolution.from_json_dict(d["hadamard"]),
            selection_segment=SegmentSpec.from_json_dict(d["selection_segment"]),
            predicted_half_period_ns=float(d["predicted_half_period_ns"]),
            measured_half_period_ns=float(d["measured_half_period_ns"]),
            predicted_peak_population=float(d["predicted_peak_population"]),
            resonance_residual_mhz=float(d["resonance_residual_mhz"]),
        )


def state_after_hadamard(hadamard: HadamardSolution, n_levels: int,
                         selection_tones_) -> np.ndarray:
    """State entering the selection segment, in the selection frame."""
    psi = propagator(
        segment_hamiltonian(hadamard.segment, n_levels), hadamard.segment.duration_ns
    ) @ basis_state(n_levels, hadamard.initial_level)
    old = frame_offsets(hadamard.segment.tones, n_levels)
    new = frame_offsets(selection_tones_, n_levels)
    return boundary_realignment(old, new, hadamard.segment.duration_ns) * psi


def plan_grover(searched_level: int, hadamard: HadamardSolution,
                n_levels: int) -> GroverPlan:
    """Build the resonant selection segment following a Hadamard gate.

    Same Rabi rates as the Hadamard, detunings from ``grover_detuning``,
    duration from the sqrt(N)/(4*Omega) prediction.  Tone phases are set so
    the selection Hamiltonian acts on the incoming superposition as if its
    relative phases were all zero (compensating both the achieved Hadamard
    phases and the frame-realignment phase at the boundary).  The actual
    half-period and peak population are measured by a dense time scan and
    reported alongside the prediction.
    """
    if not hadamard.converged:
        raise ValueError("hadamard solution did not converge")
    base = tuple(
        DriveTone(transition=t.transition, rabi_mhz=t.rabi_mhz)
        for t in hadamard.segment.tones
    )
    plain = selection_tones(base, searched_level, n_levels)
    psi_in = state_after_hadamard(hadamard, n_levels, plain)
    rel = relative_phases(psi_in)
    phases = {t.transition: float(rel[t.transition - 1] - rel[t.transition])
              for t in plain}
    tones = selection_tones(base, searched_level, n_levels, phases_rad=phases)

    n_sup = len(hadamard.target_levels)
    mean_rabi = float(np.mean([t.rabi_mhz for t in tones]))
    predicted_ns = grover_period(n_sup, mean_rabi)

    h_sel = segment_hamiltonian(SegmentSpec(tones=tones, duration_ns=0.0), n_levels)
    w, v = np.linalg.eigh(h_sel.matrix)
    coeff = v.conj().T @ psi_in
    t_grid = np.linspace(0.0, 4.0 * predicted_ns / NS_PER_US, 8192)
    amp = (np.exp(-1j * np.pi * np.outer(t_grid, w)) * coeff) @ v.T
    pop = np.abs(amp[:, searched_level]) ** 2
    peaks = argrelmax(pop)[0]
    i = int(peaks[0]) if peaks.size else int(np.argmax(pop))
    # parabolic refinement of the peak position
    if 0 < i < len(t_grid) - 1:
        y0, y1, y2 = pop[i - 1], pop[i], pop[i + 1]
        denom = y0 - 2 * y1 + y2
        shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
        t_peak = t_grid[i] + shift * (t_grid[1] - t_grid[0])
    else:
        t_peak = t_grid[i]
    psi_peak = (np.exp(-1j * np.pi * w * t_peak) * coeff) @ v.T
    measured_ns = float(t_peak * NS_PER_US)
    peak_pop = float(np.abs(psi_peak[searched_level]) ** 2)

    segment = SegmentSpec(tones=tones, duration_ns=predicted_ns)
    residual = resonance_residual(h_sel.matrix, searched_level, _band_levels(tones))
    return GroverPlan(
        searched_level=searched_level,
        hadamard=hadamard,
        selection_segment=segment,
        predicted_half_period_ns=predicted_ns,
        measured_half_period_ns=measured_ns,
        predicted_peak_population=peak_pop,
        resonance_residual_mhz=residual,
    )
