"""Quantum-phase model -E_C (d/dtheta - i a)^2 - E_J cos(theta) in the charge basis."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .bose_hubbard import Basis, HamiltonianMatrix, eigenvalues
from .errors import ParameterError
from .utils import fractional_part

CONVERGENCE_RTOL = 1e-9


def suggested_cutoff(E_C: float, E_J: float) -> int:
    """Smallest charge cutoff M accepted for (E_C, E_J)."""
    return int(math.ceil(4.0 * math.sqrt(E_J / E_C) + 10.0))


@dataclass(frozen=True)
class PhaseModelParams:
    """E_C, E_J, offset a (stored as its fractional part) and charge cutoff M."""

    E_C: float
    E_J: float
    a: float
    M: int

    def __post_init__(self):
        problems = []
        if not (math.isfinite(self.E_C) and self.E_C > 0):
            problems.append(f"E_C must be > 0 (got {self.E_C})")
        if not (math.isfinite(self.E_J) and self.E_J >= 0):
            problems.append(f"E_J must be >= 0 (got {self.E_J})")
        if not math.isfinite(self.a):
            problems.append(f"offset a must be finite (got {self.a})")
        if isinstance(self.M, bool) or not isinstance(self.M, (int, np.integer)) or self.M < 1:
            problems.append(f"M must be a positive integer (got {self.M!r})")
        if problems:
            raise ParameterError("; ".join(problems))
        object.__setattr__(self, "a", fractional_part(float(self.a)))
        object.__setattr__(self, "M", int(self.M))

    @classmethod
    def from_reference_occupation(cls, E_C: float, E_J: float, n_bar: float, M: Optional[int] = None):
        if M is None:
            M = suggested_cutoff(E_C, E_J)
        return cls(E_C=E_C, E_J=E_J, a=fractional_part(n_bar), M=M)

    def with_offset(self, a: float) -> "PhaseModelParams":
        return PhaseModelParams(self.E_C, self.E_J, a, self.M)

    def with_cutoff(self, M: int) -> "PhaseModelParams":
        return PhaseModelParams(self.E_C, self.E_J, self.a, M)


@dataclass(frozen=True)
class ConventionFlag:
    """hopping_match=True scales the cosine so the charge hopping is -E_J, as in H_B-H.

    With hopping_match=False the literal -E_J cos(theta) is used (hopping -E_J/2).
    """

    hopping_match: bool = True

    def hopping(self, E_J: float) -> float:
        return -E_J if self.hopping_match else -0.5 * E_J


def build_phase_operator(p: PhaseModelParams, c: ConventionFlag = ConventionFlag()) -> HamiltonianMatrix:
    need = 4.0 * math.sqrt(p.E_J / p.E_C) + 10.0
    if p.M < need:
        raise ParameterError(f"charge cutoff M={p.M} below 4 sqrt(E_J/E_C) + 10; use M >= {suggested_cutoff(p.E_C, p.E_J)}")
    m = np.arange(-p.M, p.M + 1, dtype=float)
    diag = p.E_C * (m - p.a) ** 2
    off = np.full(2 * p.M, c.hopping(p.E_J))
    return HamiltonianMatrix(diag, off, 0.0, Basis.charge(p.M))


def phase_levels(p: PhaseModelParams, c: ConventionFlag = ConventionFlag(), count: int = 5) -> np.ndarray:
    return eigenvalues(build_phase_operator(p, c), count)


@dataclass(frozen=True)
class BandTable:
    """Lowest levels per offset: energies[i, j] is level j at a_grid[i]."""

    a_grid: np.ndarray
    energies: np.ndarray

    def to_columns(self):
        header = ["a"] + [f"E{j}" for j in range(self.energies.shape[1])]
        rows = [[float(a)] + [float(e) for e in row] for a, row in zip(self.a_grid, self.energies)]
        return header, rows


def band_sweep(
    p: PhaseModelParams,
    c: ConventionFlag,
    a_grid: Sequence[float],
    count: int = 4,
    workers: Optional[int] = None,
) -> BandTable:
    a_grid = np.asarray(a_grid, dtype=float)
    bad = [float(a) for a in a_grid if not 0.0 <= a < 1.0]
    if bad:
        raise ParameterError(f"offsets must lie in [0, 1): {bad[:5]}")
    workers = workers or min(32, os.cpu_count() or 8)

    def level(a: float) -> np.ndarray:
        return phase_levels(p.with_offset(a), c, count)

    with ThreadPoolExecutor(max_workers=workers) as ex:
        rows = list(ex.map(level, a_grid))
    return BandTable(a_grid, np.vstack(rows) if rows else np.empty((0, count)))


def convergence_check(p: PhaseModelParams, c: ConventionFlag = ConventionFlag(), count: int = 5) -> float:
    """Largest relative change of the lowest `count` levels when M grows by 25%.

    Changes are measured against max(|E|, E_C) so levels near zero do not blow up.
    """
    base = phase_levels(p, c, count)
    grown = phase_levels(p.with_cutoff(int(math.ceil(1.25 * p.M))), c, count)
    scale = np.maximum(np.abs(base), p.E_C)
    return float(np.max(np.abs(grown - base) / scale))


def is_converged(p: PhaseModelParams, c: ConventionFlag = ConventionFlag(), count: int = 5) -> bool:
    return convergence_check(p, c, count) < CONVERGENCE_RTOL


def charge_dispersion(p: PhaseModelParams, c: ConventionFlag = ConventionFlag(), level: int = 0) -> float:
    """|E_level(a=0) - E_level(a=1/2)|; shrinks exponentially with sqrt(E_J/E_C)."""
    e0 = phase_levels(p.with_offset(0.0), c, level + 1)[level]
    e_half = phase_levels(p.with_offset(0.5), c, level + 1)[level]
    return float(abs(e0 - e_half))
