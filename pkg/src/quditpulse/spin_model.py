"""Static spectrum of the spin qudit.

The nuclear-spin levels are modelled by a diagonal energy function
E(m) = a*m + q*m**2 (GHz) over unit-spaced projections m.  The quadratic
term makes the level spacing unequal, which is what allows each
transition to be addressed by its own microwave frequency.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Two transition frequencies closer than this are considered unaddressable.
DEGENERACY_TOL_GHZ = 1e-6  # 1 kHz

# Measured transition frequencies of the TbPc2 nuclear spin (GHz).
TB_TRANSITION_FREQS_GHZ = (2.452, 3.128, 3.799)


@dataclass(frozen=True)
class LevelModel:
    """Linear-plus-quadratic level model in frequency units.

    a: linear coefficient (GHz per unit m)
    q: quadratic coefficient (GHz per unit m**2)
    m_values: strictly increasing, unit-spaced spin projections
    """

    a: float
    q: float
    m_values: tuple[float, ...]

    def __post_init__(self):
        m = np.asarray(self.m_values, dtype=float)
        if m.size < 2:
            raise ValueError("need at least 2 levels")
        steps = np.diff(m)
        if not np.allclose(steps, 1.0, atol=1e-12):
            raise ValueError("m_values must be strictly increasing in steps of 1")

    @property
    def n_levels(self) -> int:
        return len(self.m_values)

    def energies_ghz(self) -> np.ndarray:
        m = np.asarray(self.m_values, dtype=float)
        return self.a * m + self.q * m**2


@dataclass(frozen=True)
class QuditSpec:
    """Level count and the N-1 transition frequencies nu_n (GHz).

    nu_n drives the (n-1) <-> n transition (n = 1..N-1, levels 0-based).
    ``degenerate`` is a warning flag: some pair of frequencies coincides
    within DEGENERACY_TOL_GHZ, so the spec is unusable for gate design.
    """

    n_levels: int
    transition_freqs_ghz: tuple[float, ...]
    degenerate: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.n_levels < 2:
            raise ValueError("n_levels must be >= 2")
        if len(self.transition_freqs_ghz) != self.n_levels - 1:
            raise ValueError(
                f"expected {self.n_levels - 1} transition frequencies, "
                f"got {len(self.transition_freqs_ghz)}"
            )
        if any(f <= 0 for f in self.transition_freqs_ghz):
            raise ValueError("transition frequencies must be positive")

    def to_json_dict(self) -> dict:
        return {
            "n_levels": self.n_levels,
            "transition_freqs_ghz": list(self.transition_freqs_ghz),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "QuditSpec":
        freqs = tuple(float(f) for f in d["transition_freqs_ghz"])
        return cls(
            n_levels=int(d["n_levels"]),
            transition_freqs_ghz=freqs,
            degenerate=_is_degenerate(freqs),
        )


def _is_degenerate(freqs, tol=DEGENERACY_TOL_GHZ) -> bool:
    f = np.sort(np.asarray(freqs, dtype=float))
    return bool(f.size >= 2 and np.min(np.diff(f)) < tol)


def transition_frequencies(model: LevelModel) -> QuditSpec:
    """Transition frequencies nu_n = E(m_n) - E(m_{n-1}) of a level model.

    For unit-spaced m this is a + q*(2*m + 1) evaluated at the lower level
    of each transition.  A degenerate result (two frequencies within
    DEGENERACY_TOL_GHZ) is flagged on the returned spec rather than raised.
    """
    e = model.energies_ghz()
    freqs = tuple(np.diff(e))
    return QuditSpec(
        n_levels=model.n_levels,
        transition_freqs_ghz=freqs,
        degenerate=_is_degenerate(freqs),
    )


def fit_level_model(
    freqs_ghz, m_values=None
) -> tuple[LevelModel, float]:
    """Least-squares (a, q) for measured transition frequencies.

    Minimizes sum_n (nu_n - a - q*(2*m_n + 1))**2 over the lower-level
    projections m_n.  Defaults to projections centred on zero (the
    I = (N-1)/2 ladder).  Returns the model and the RMS residual in GHz.
    """
    freqs = np.asarray(freqs_ghz, dtype=float)
    if freqs.size < 2:
        raise ValueError("need at least 2 transition frequencies to fit (a, q)")
    n_levels = freqs.size + 1
    if m_values is None:
        m_values = tuple(np.arange(n_levels) - (n_levels - 1) / 2)
    m_lower = np.asarray(m_values[:-1], dtype=float)
    design = np.column_stack([np.ones_like(m_lower), 2 * m_lower + 1])
    coef, *_ = np.linalg.lstsq(design, freqs, rcond=None)
    a, q = float(coef[0]), float(coef[1])
    residual = float(np.sqrt(np.mean((design @ coef - freqs) ** 2)))
    return LevelModel(a=a, q=q, m_values=tuple(m_values)), residual


def default_tb_qudit() -> QuditSpec:
    """The measured 4-level TbPc2 nuclear-spin spectrum."""
    return QuditSpec(n_levels=4, transition_freqs_ghz=TB_TRANSITION_FREQS_GHZ)
