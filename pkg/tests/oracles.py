"""Independent numerical oracles for the test suite.

These deliberately avoid the library's rotating-frame machinery: the
fine-step integrator works in the fixed transition-frequency frame, where
nothing is absorbed into the frame and every drive tone appears as an
explicitly time-dependent phase.  Agreement with the library therefore
validates both the frame Hamiltonian convention and the inter-segment
realignment phases.
"""

from __future__ import annotations

import numpy as np

NS_PER_US = 1000.0


def detuned_p1(rabi_mhz: float, detuning_mhz: float, t_ns) -> np.ndarray:
    """Closed-form two-level excited population under a square drive."""
    t_us = np.asarray(t_ns, dtype=float) / NS_PER_US
    w = np.hypot(rabi_mhz, detuning_mhz)
    if w == 0.0:
        return np.zeros_like(t_us)
    return (rabi_mhz**2 / w**2) * np.sin(np.pi * w * t_us) ** 2


def _fixed_frame_matrix(tones, n_levels: int, t_abs_us: float) -> np.ndarray:
    """Drive matrix in the fixed transition-frequency frame (MHz).

    The frame removes the static level energies exactly, so the diagonal is
    zero and the tone driving transition k, detuned by delta_k from its
    transition, oscillates at the difference of the per-level offsets:
    coupling (k-1, k) = Omega_k * exp(i * (phi_k - 2 pi (D_k - D_{k-1}) t))
    with D_j the detuning of the tone on transition j (0 if undriven).
    """
    m = np.zeros((n_levels, n_levels), dtype=complex)
    offsets = np.zeros(n_levels)
    for tone in tones:
        offsets[tone.transition] = tone.detuning_mhz
    for tone in tones:
        k = tone.transition
        rate = offsets[k] - offsets[k - 1]
        phase = tone.phase_rad - 2.0 * np.pi * rate * t_abs_us
        m[k - 1, k] = tone.rabi_mhz * np.exp(1j * phase)
        m[k, k - 1] = np.conj(m[k - 1, k])
    return m


def integrate_sequence(segments, initial, dt_ps: float = 10.0) -> np.ndarray:
    """Midpoint-exponential fine-step evolution in the fixed frame.

    Returns the final state in the fixed frame; compare against
    evolve_sequence(..., frame="fixed").
    """
    state = np.asarray(initial, dtype=complex).copy()
    n = state.size
    dt_us = dt_ps * 1e-6
    t_abs = 0.0
    for seg in segments:
        remaining = seg.duration_ns / NS_PER_US
        while remaining > 1e-15:
            step = min(dt_us, remaining)
            m = _fixed_frame_matrix(seg.tones, n, t_abs + 0.5 * step)
            w, v = np.linalg.eigh(m)
            u = (v * np.exp(-1j * np.pi * w * step)) @ v.conj().T
            state = u @ state
            t_abs += step
            remaining -= step
    return state
