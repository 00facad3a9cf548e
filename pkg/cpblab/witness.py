"""Model-independent quantumness test built from two dominated observables.

If 0 <= A <= B as operators, every classical (commuting) model also has
0 <= <A^2> <= <B^2>. A state with <B^2 - A^2> < 0 therefore witnesses
non-classical behavior.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np
import scipy.linalg as la
from scipy.stats import unitary_group

from .bose_hubbard import Basis, StateVector
from .errors import BasisMismatchError, ParameterError

DEFAULT_TOLERANCE = 5e-3
HERMITIAN_TOL = 1e-12
VIOLATION_FLOOR = -1e-12
CLASSICAL_FLOOR = -1e-10

# the published 2x2 example, entries rounded to three significant figures
PUBLISHED_A = ((0.724, 0.249), (0.249, 0.0854))
PUBLISHED_B = ((1.0, 0.0), (0.0, 0.309))
PUBLISHED_STATE = (0.391, 0.920)


@dataclass(frozen=True)
class ObservablePair:
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=complex)
        B = np.array(self.B, dtype=complex)
        d = A.shape[0] if A.ndim == 2 else 0
        if A.shape != (d, d) or B.shape != (d, d) or d < 2:
            raise ParameterError(f"A and B must be square matrices of equal dimension >= 2, got {A.shape} and {B.shape}")
        for name, M in (("A", A), ("B", B)):
            dev = np.max(np.abs(M - M.conj().T))
            if dev > HERMITIAN_TOL:
                raise ParameterError(f"{name} is not Hermitian (deviation {dev:.2e})")
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def dimension(self) -> int:
        return self.A.shape[0]

    @property
    def witness_operator(self) -> np.ndarray:
        """B^2 - A^2."""
        return self.B @ self.B - self.A @ self.A

    def conjugated(self, U) -> "ObservablePair":
        U = np.asarray(U)
        return ObservablePair(U @ self.A @ U.conj().T, U @ self.B @ U.conj().T)


def paper_instance() -> ObservablePair:
    return ObservablePair(np.array(PUBLISHED_A), np.array(PUBLISHED_B))


@dataclass(frozen=True)
class Dominance:
    certified: bool
    margin_A: float
    margin_BA: float
    tolerance: float


def _min_eig(M: np.ndarray) -> float:
    return float(la.eigh(M, eigvals_only=True)[0])


def check_dominance(p: ObservablePair, tol: float = DEFAULT_TOLERANCE) -> Dominance:
    """0 <= <A> <= <B> for every state, i.e. A and B - A positive semidefinite up to tol."""
    if not (math.isfinite(tol) and tol >= 0):
        raise ParameterError(f"tolerance must be >= 0, got {tol}")
    mA = _min_eig(p.A)
    mBA = _min_eig(p.B - p.A)
    return Dominance(mA >= -tol and mBA >= -tol, mA, mBA, tol)


def _amplitudes(phi, dimension: int) -> np.ndarray:
    a = phi.amplitudes if isinstance(phi, StateVector) else np.asarray(phi, dtype=complex)
    if a.shape != (dimension,):
        raise BasisMismatchError(f"state of shape {a.shape} for observables of dimension {dimension}")
    n = np.linalg.norm(a)
    if n == 0.0:
        raise ParameterError("zero state")
    return a / n


def witness_value(p: ObservablePair, phi) -> float:
    """<phi| B^2 - A^2 |phi> for the normalized phi."""
    a = _amplitudes(phi, p.dimension)
    return float(np.vdot(a, p.witness_operator @ a).real)


@dataclass(frozen=True)
class Violation:
    state: StateVector
    value: float
    certified: bool


def find_violation(p: ObservablePair, tol: float = DEFAULT_TOLERANCE) -> Optional[Violation]:
    """Lowest eigenpair of B^2 - A^2 when it is negative, else None."""
    w, v = la.eigh(p.witness_operator, subset_by_index=[0, 0])
    value = float(w[0])
    if value >= VIOLATION_FLOOR:
        return None
    vec = v[:, 0]
    # fix the global phase: largest component real and positive
    k = int(np.argmax(np.abs(vec)))
    vec = vec * (abs(vec[k]) / vec[k])
    state = StateVector(vec, Basis("index", p.dimension))
    return Violation(state, value, check_dominance(p, tol).certified)


def random_dominated_pair(dimension: int, rng: np.random.Generator, rotate: bool = False) -> ObservablePair:
    """Commuting pair with 0 <= A <= B: diagonal, optionally in a shared random eigenbasis."""
    if dimension < 2:
        raise ParameterError(f"dimension must be >= 2, got {dimension}")
    a = rng.uniform(0.0, 1.0, dimension)
    b = a + rng.uniform(0.0, 1.0, dimension)
    A, B = np.diag(a).astype(complex), np.diag(b).astype(complex)
    if rotate:
        U = unitary_group.rvs(dimension, random_state=rng)
        A, B = U @ A @ U.conj().T, U @ B @ U.conj().T
        A, B = 0.5 * (A + A.conj().T), 0.5 * (B + B.conj().T)
    return ObservablePair(A, B)


@dataclass(frozen=True)
class NoGoReport:
    samples: int
    failures: int
    worst: float

    @property
    def passed(self) -> bool:
        return self.failures == 0


def classical_no_go_property(
    samples: int = 10_000,
    dimensions: Union[int, Sequence[int]] = (2, 3, 4, 5, 6),
    seed: Optional[int] = 0,
    rotate: bool = False,
) -> NoGoReport:
    """Sample commuting dominated pairs and check min eig(B^2 - A^2) >= -1e-10 for each."""
    if samples < 1:
        raise ParameterError(f"samples must be >= 1, got {samples}")
    dims = [dimensions] if isinstance(dimensions, int) else list(dimensions)
    if not dims:
        raise ParameterError("no dimensions given")
    rng = np.random.default_rng(seed)
    failures, worst = 0, math.inf
    for i in range(samples):
        p = random_dominated_pair(dims[i % len(dims)], rng, rotate)
        m = _min_eig(p.witness_operator)
        worst = min(worst, m)
        if m < CLASSICAL_FLOOR:
            failures += 1
    return NoGoReport(samples, failures, worst)


def _as_list(z: Iterable[complex]):
    out = []
    for c in z:
        c = complex(c)
        out.append(c.real if c.imag == 0.0 else [c.real, c.imag])
    return out


def witness_report(p: ObservablePair, phi=None, tol: float = DEFAULT_TOLERANCE) -> dict:
    """JSON-ready summary: margins, witness value, optimal violating state, certification."""
    dom = check_dominance(p, tol)
    found = find_violation(p, tol)
    value = witness_value(p, phi) if phi is not None else (found.value if found else _min_eig(p.witness_operator))
    return {
        "margins": {"A": dom.margin_A, "B_minus_A": dom.margin_BA},
        "witness_value": value,
        "violating_state": _as_list(found.state.amplitudes) if found else None,
        "violation_value": found.value if found else None,
        "certified": dom.certified,
        "tolerance": tol,
    }
