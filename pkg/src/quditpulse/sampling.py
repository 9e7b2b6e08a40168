"""Monte Carlo emulation of the shot-based readout protocol.

Each cycle prepares a basis state, runs the pulse sequence, and projects
the final state onto the level basis.  Cycles whose readout event goes
undetected (probability 1 - eta) are rejected and not counted, mirroring
the experimental cycle rejection.  Slow environmental noise is modelled by
one Gaussian detuning offset per shot, shared by all tones.

The RNG is numpy's seeded PCG64 ``default_rng``; parallel workers draw
from ``SeedSequence(seed).spawn(n)`` substreams, one per worker chunk, and
counts merge by summation, so serial and parallel runs agree.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .evolution import basis_state, evolve_sequence
from .gates import GroverPlan
from .hamiltonian import SegmentSpec


@dataclass(frozen=True)
class CycleConfig:
    shots: int = 1000
    seed: int = 0
    detection_prob: float = 1.0
    quasistatic_detuning_sigma_mhz: float = 0.0

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if not 0.0 < self.detection_prob <= 1.0:
            raise ValueError("detection_prob must be in (0, 1]")
        if self.quasistatic_detuning_sigma_mhz < 0:
            raise ValueError("noise sigma must be >= 0")


@dataclass(frozen=True)
class TransitionCounts:
    """counts[i, j] = detected events starting in level i and read out in j."""

    counts: np.ndarray = field(repr=False)
    attempted: int

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("counts must be a square matrix")
        if np.any(c < 0):
            raise ValueError("counts must be non-negative")
        if c.sum() > self.attempted:
            raise ValueError("more counted events than attempted cycles")

    @property
    def n_levels(self) -> int:
        return self.counts.shape[0]

    def merge(self, other: "TransitionCounts") -> "TransitionCounts":
        return TransitionCounts(
            counts=self.counts + other.counts,
            attempted=self.attempted + other.attempted,
        )

    def to_csv(self, path) -> None:
        np.savetxt(path, self.counts, fmt="%d", delimiter=",",
                   header=f"attempted={self.attempted}")


def _shift_tones(segment: SegmentSpec, offset_mhz: float) -> SegmentSpec:
    tones = tuple(
        replace(t, detuning_mhz=t.detuning_mhz + offset_mhz) for t in segment.tones
    )
    return SegmentSpec(tones=tones, duration_ns=segment.duration_ns)


def run_cycles(
    sequence, initial_level: int, n_levels: int, config: CycleConfig,
    rng: np.random.Generator | None = None,
) -> TransitionCounts:
    """Run ``config.shots`` accepted measurement cycles of a pulse sequence.

    Shots are counted after rejection: rejected cycles increase
    ``attempted`` only, so every row sum of accepted counts equals
    ``shots``.  Reproducible given the seed.
    """
    sequence = list(sequence)
    if rng is None:
        rng = np.random.default_rng(config.seed)
    counts = np.zeros((n_levels, n_levels), dtype=np.int64)
    attempted = 0
    accepted = 0
    sigma = config.quasistatic_detuning_sigma_mhz
    init = basis_state(n_levels, initial_level)
    probs_cache = None
    while accepted < config.shots:
        attempted += 1
        detected = config.detection_prob >= 1.0 or rng.random() < config.detection_prob
        if sigma > 0.0:
            offset = rng.normal(0.0, sigma)
            if not detected:
                continue
            shifted = [_shift_tones(seg, offset) for seg in sequence]
            probs = np.abs(evolve_sequence(shifted, init)) ** 2
        else:
            if not detected:
                continue
            if probs_cache is None:
                probs_cache = np.abs(evolve_sequence(sequence, init)) ** 2
            probs = probs_cache
        cdf = np.cumsum(probs)
        outcome = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        outcome = min(outcome, n_levels - 1)
        counts[initial_level, outcome] += 1
        accepted += 1
    return TransitionCounts(counts=counts, attempted=attempted)


def transition_probability(counts: TransitionCounts, i: int, j: int) -> float:
    """P_ij = N_ij / sum_n N_in."""
    row = counts.counts[i]
    total = row.sum()
    if total == 0:
        raise ValueError(f"no accepted shots from initial state {i}")
    return float(row[j] / total)


def probability_matrix(counts: TransitionCounts) -> np.ndarray:
    """Row-normalized probabilities; rows with no events are NaN."""
    c = counts.counts.astype(float)
    totals = c.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(totals > 0, c / totals, np.nan)


def visibility(p_matrix: np.ndarray, i: int, j: int, mode: str = "directed") -> float:
    if mode == "symmetric":
        return float(p_matrix[i, j] + p_matrix[j, i])
    if mode == "directed":
        return float(p_matrix[i, j])
    raise ValueError(f"mode must be 'symmetric' or 'directed', got {mode!r}")


def _with_detunings(segment: SegmentSpec, per_transition: dict) -> SegmentSpec:
    tones = tuple(
        replace(t, detuning_mhz=per_transition.get(t.transition, t.detuning_mhz))
        for t in segment.tones
    )
    return SegmentSpec(tones=tones, duration_ns=segment.duration_ns)


def detuning_map(
    hadamard_segment: SegmentSpec,
    selection_template: SegmentSpec,
    delta1_grid_mhz,
    delta2_grid_mhz,
    duration_ns: float,
    searched_level: int,
    initial_level: int,
    n_levels: int,
    config: CycleConfig | None = None,
    vary_hadamard: bool = True,
    workers: int = 1,
) -> np.ndarray:
    """Searched-state visibility over a grid of the two drive detunings.

    The grid axes are the detunings of the selection segment's first and
    second driven transitions.  With ``vary_hadamard`` (default), both
    pulses derive from the same two carriers, so shifting a carrier off its
    design frequency detunes the Hadamard pulse by the same offset; this
    mirrors sweeping the synthesizer frequencies in the experiment.  With
    ``vary_hadamard=False`` the Hadamard pulse is left untouched.

    Noiseless (config=None): returns exact searched-state populations.
    With a config: Monte Carlo directed visibilities, one run per pixel
    with per-pixel RNG substreams.
    """
    d1_grid = np.asarray(delta1_grid_mhz, dtype=float)
    d2_grid = np.asarray(delta2_grid_mhz, dtype=float)
    if d1_grid.size == 0 or d2_grid.size == 0:
        raise ValueError("detuning grids must be non-empty")
    sel_transitions = sorted(t.transition for t in selection_template.tones)
    if len(sel_transitions) != 2:
        raise ValueError("selection template must drive exactly two transitions")
    tr1, tr2 = sel_transitions
    sel_design = {t.transition: t.detuning_mhz for t in selection_template.tones}
    had_design = {t.transition: t.detuning_mhz for t in hadamard_segment.tones}

    seeds = None
    if config is not None:
        seeds = np.random.SeedSequence(config.seed).spawn(d1_grid.size * d2_grid.size)

    def pixel(i, j):
        d1, d2 = d1_grid[i], d2_grid[j]
        sel = _with_detunings(selection_template, {tr1: d1, tr2: d2})
        sel = SegmentSpec(tones=sel.tones, duration_ns=duration_ns)
        had = hadamard_segment
        if vary_hadamard:
            shifts = {tr1: d1 - sel_design[tr1], tr2: d2 - sel_design[tr2]}
            had = _with_detunings(
                hadamard_segment,
                {tr: had_design.get(tr, 0.0) + shifts.get(tr, 0.0)
                 for tr in had_design},
            )
        seq = [had, sel]
        if config is None:
            psi = evolve_sequence(seq, basis_state(n_levels, initial_level))
            return float(np.abs(psi[searched_level]) ** 2)
        rng = np.random.default_rng(seeds[i * d2_grid.size + j])
        counts = run_cycles(seq, initial_level, n_levels, config, rng=rng)
        return visibility(probability_matrix(counts), initial_level, searched_level)

    pixels = [(i, j) for i in range(d1_grid.size) for j in range(d2_grid.size)]
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(lambda ij: pixel(*ij), pixels))
    else:
        values = [pixel(i, j) for (i, j) in pixels]
    return np.array(values).reshape(d1_grid.size, d2_grid.size)


def map_to_csv(map_values: np.ndarray, delta1_grid_mhz, delta2_grid_mhz, path) -> None:
    """One row per delta1, columns labelled by delta2 in the header."""
    header = "delta1_mhz," + ",".join(
        "%.12g" % d2 for d2 in np.asarray(delta2_grid_mhz)
    )
    rows = np.column_stack([np.asarray(delta1_grid_mhz), map_values])
    np.savetxt(path, rows, fmt="%.12g", delimiter=",", header=header, comments="")


def grover_map_grids(plan: GroverPlan, span_mhz: float = 4.0,
                     step_mhz: float = 0.2) -> tuple[np.ndarray, np.ndarray]:
    """Detuning grids centred so the plan's design point lies on-grid."""
    design = {t.transition: t.detuning_mhz for t in plan.selection_segment.tones}
    transitions = sorted(design)
    grids = []
    for tr in transitions[:2]:
        centre = design[tr]
        n = int(round(span_mhz / step_mhz))
        grids.append(centre + step_mhz * np.arange(-n, n + 1))
    return grids[0], grids[1]
