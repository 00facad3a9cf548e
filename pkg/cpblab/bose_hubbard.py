"""Two-mode Bose-Hubbard description of a Cooper pair box.

Number basis |k>, k = 0..N (k pairs on the island), the exact restricted
two-mode Hamiltonian, its Bose-Hubbard approximation, the large-N oscillator
Hamiltonian H_b on a truncated Fock space, and the product/coherent states
that connect the quantum and mean-field pictures.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as la
from scipy.special import gammaln
from scipy.stats import binom

from .errors import BasisMismatchError, ConvergenceError, ParameterError, TruncationError
from .utils import default_cutoff

CONSISTENCY_RTOL = 1e-12
TAIL_AMPLITUDE = 1e-8
# dimension above which open-boundary matrices go to the tridiagonal solver
BANDED_ABOVE = 500


def _close(a: float, b: float, rtol: float = CONSISTENCY_RTOL) -> bool:
    return abs(a - b) <= rtol * max(abs(a), abs(b), 1e-300)


# --------------------------------------------------------------------------- #
# parameters
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class CpbParams:
    """Physical parameters of one box.

    Use `from_potential` or `from_josephson`; they fill the derived fields so
    that g = 4 E_C, n_bar = U / (4 E_C) and E_J = K sqrt(n_bar (N - n_bar)).
    """

    E_C: float
    K: float
    E_J: float
    N: int
    n_bar: float
    g: float
    U: float

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ParameterError("; ".join(problems))

    @classmethod
    def from_potential(cls, E_C: float, K: float, N: int, U: float) -> "CpbParams":
        n_bar = U / (4.0 * E_C) if E_C > 0 else float("nan")
        E_J = K * math.sqrt(max(n_bar * (N - n_bar), 0.0)) if math.isfinite(n_bar) else float("nan")
        return cls(E_C=E_C, K=K, E_J=E_J, N=N, n_bar=n_bar, g=4.0 * E_C, U=U)

    @classmethod
    def from_josephson(cls, E_C: float, E_J: float, N: int, n_bar: float) -> "CpbParams":
        span = n_bar * (N - n_bar)
        if E_J == 0.0:
            K = 0.0
        elif span > 0:
            K = E_J / math.sqrt(span)
        else:
            raise ParameterError(f"E_J > 0 needs 0 < n_bar < N, got n_bar={n_bar}, N={N}")
        return cls(E_C=E_C, K=K, E_J=E_J, N=N, n_bar=n_bar, g=4.0 * E_C, U=4.0 * E_C * n_bar)

    @staticmethod
    def check(E_C: float, E_J: float, N, n_bar: float) -> List[str]:
        """Precondition messages for a (E_C, E_J, N, n_bar) set; empty when valid."""
        problems = []
        if not (math.isfinite(E_C) and E_C > 0):
            problems.append(f"E_C must be > 0 (got {E_C})")
        if not (math.isfinite(E_J) and E_J >= 0):
            problems.append(f"E_J must be >= 0 (got {E_J})")
        if isinstance(N, bool) or not isinstance(N, (int, np.integer)) or N < 2:
            problems.append(f"N must be an integer >= 2 (got {N!r})")
        elif not (math.isfinite(n_bar) and 0.0 <= n_bar <= N):
            problems.append(f"n_bar must lie in [0, N={N}] (got {n_bar})")
        elif E_J > 0 and not 0.0 < n_bar < N:
            problems.append(f"E_J > 0 needs 0 < n_bar < N (got {n_bar})")
        return problems

    def problems(self) -> List[str]:
        out = self.check(self.E_C, self.E_J, self.N, self.n_bar)
        if not (math.isfinite(self.K) and self.K >= 0):
            out.append(f"K must be >= 0 (got {self.K})")
        if out:
            return out
        if not _close(self.g, 4.0 * self.E_C):
            out.append(f"g={self.g} inconsistent with 4 E_C={4.0 * self.E_C}")
        if not _close(self.n_bar, self.U / (4.0 * self.E_C)) and not (self.n_bar == 0 and self.U == 0):
            out.append(f"n_bar={self.n_bar} inconsistent with U/(4 E_C)={self.U / (4.0 * self.E_C)}")
        e_j = self.K * math.sqrt(self.n_bar * (self.N - self.n_bar))
        if not (_close(self.E_J, e_j) or (self.E_J == 0 and e_j == 0)):
            out.append(f"E_J={self.E_J} inconsistent with K sqrt(n_bar (N - n_bar))={e_j}")
        return out

    @property
    def plasma_frequency(self) -> float:
        """sqrt(2 E_C E_J), small-oscillation frequency of h = E_C xi^2 - E_J cos(theta)."""
        return math.sqrt(2.0 * self.E_C * self.E_J)

    def as_dict(self) -> dict:
        return {"E_C": self.E_C, "K": self.K, "E_J": self.E_J, "N": int(self.N),
                "n_bar": self.n_bar, "g": self.g, "U": self.U}


# --------------------------------------------------------------------------- #
# bases, matrices, states
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class Basis:
    """Ordered basis with integer labels k_min .. k_min + size - 1.

    kind is "number" (|k>, k = 0..N), "fock" (b^dagger b eigenstates up to a
    cutoff), "charge" (m = -M..M) or "index" (anything else).
    """

    kind: str
    size: int
    k_min: int = 0

    @classmethod
    def number(cls, N: int) -> "Basis":
        return cls("number", int(N) + 1, 0)

    @classmethod
    def fock(cls, cutoff: int, k_min: int = 0) -> "Basis":
        return cls("fock", int(cutoff) - int(k_min) + 1, int(k_min))

    @classmethod
    def charge(cls, M: int) -> "Basis":
        return cls("charge", 2 * int(M) + 1, -int(M))

    @property
    def labels(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_min + self.size)

    @property
    def cutoff(self) -> int:
        return self.k_min + self.size - 1

    def __str__(self) -> str:
        if self.kind == "number":
            return f"number_N({self.size - 1})"
        if self.kind == "fock":
            lo = f"{self.k_min}.." if self.k_min else ""
            return f"fock_truncated({lo}{self.cutoff})"
        return f"{self.kind}({self.k_min}..{self.cutoff})"


@dataclass(frozen=True)
class HamiltonianMatrix:
    """Real symmetric tridiagonal matrix plus an optional first<->last coupling."""

    diagonal: np.ndarray
    off_diagonal: np.ndarray
    corner: float = 0.0
    basis: Optional[Basis] = None

    def __post_init__(self):
        d = np.array(self.diagonal, dtype=float)
        e = np.array(self.off_diagonal, dtype=float)
        if d.ndim != 1 or d.size < 1:
            raise ParameterError("diagonal must be a non-empty 1-d array")
        if e.shape != (d.size - 1,):
            raise ParameterError(f"off_diagonal must have length {d.size - 1}, got {e.shape}")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(e)) and math.isfinite(self.corner)):
            raise ParameterError("Hamiltonian entries must be finite")
        basis = self.basis or Basis("index", d.size)
        if basis.size != d.size:
            raise BasisMismatchError(f"basis {basis} does not match dimension {d.size}")
        d.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "diagonal", d)
        object.__setattr__(self, "off_diagonal", e)
        object.__setattr__(self, "corner", float(self.corner))
        object.__setattr__(self, "basis", basis)

    @property
    def dimension(self) -> int:
        return self.diagonal.size

    @property
    def is_tridiagonal(self) -> bool:
        return self.corner == 0.0

    @classmethod
    def from_dense(cls, M, basis: Optional[Basis] = None, atol: float = 0.0) -> "HamiltonianMatrix":
        M = np.asarray(M, dtype=float)
        n = M.shape[0]
        if M.shape != (n, n) or not np.allclose(M, M.T, rtol=0.0, atol=atol):
            raise ParameterError("matrix is not square symmetric")
        corner = float(M[0, -1]) if n > 2 else 0.0
        rest = M - np.diag(np.diag(M)) - np.diag(np.diag(M, 1), 1) - np.diag(np.diag(M, -1), -1)
        if n > 2:
            rest[0, -1] -= corner
            rest[-1, 0] -= corner
        if np.max(np.abs(rest), initial=0.0) > atol:
            raise ParameterError("matrix has entries outside the band and corner")
        return cls(np.diag(M).copy(), np.diag(M, 1).copy(), corner, basis)

    def to_dense(self) -> np.ndarray:
        M = np.diag(self.diagonal) + np.diag(self.off_diagonal, 1) + np.diag(self.off_diagonal, -1)
        if self.corner and self.dimension > 1:
            M[0, -1] += self.corner
            M[-1, 0] += self.corner
        return M

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        out = self.diagonal * v
        out[:-1] += self.off_diagonal * v[1:]
        out[1:] += self.off_diagonal * v[:-1]
        if self.corner and self.dimension > 1:
            out[0] += self.corner * v[-1]
            out[-1] += self.corner * v[0]
        return out

    def norm(self) -> float:
        """Max absolute row sum; bounds the spectral norm from above."""
        rows = np.abs(self.diagonal).copy()
        rows[:-1] += np.abs(self.off_diagonal)
        rows[1:] += np.abs(self.off_diagonal)
        if self.corner and self.dimension > 1:
            rows[0] += abs(self.corner)
            rows[-1] += abs(self.corner)
        return float(rows.max())


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray
    basis: Basis

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex)
        if a.ndim != 1 or a.size != self.basis.size:
            raise BasisMismatchError(f"{a.size} amplitudes for basis {self.basis}")
        if not np.all(np.isfinite(a)):
            raise ParameterError("state amplitudes must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @property
    def dimension(self) -> int:
        return self.amplitudes.size

    @property
    def labels(self) -> np.ndarray:
        return self.basis.labels

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise ParameterError("cannot normalize the zero vector")
        return StateVector(self.amplitudes / n, self.basis)

    def as_fock(self, cutoff: Optional[int] = None) -> "StateVector":
        """Reread the labels k as b^dagger b eigenvalues on a Fock basis 0..cutoff."""
        if self.basis.kind not in ("number", "fock"):
            raise BasisMismatchError(f"cannot read {self.basis} as a Fock basis")
        cutoff = self.basis.cutoff if cutoff is None else int(cutoff)
        target = Basis.fock(cutoff)
        out = np.zeros(target.size, dtype=complex)
        k = self.labels
        keep = k <= cutoff
        if np.any(np.abs(self.amplitudes[~keep]) > TAIL_AMPLITUDE):
            raise TruncationError(f"amplitude above Fock cutoff {cutoff} exceeds {TAIL_AMPLITUDE}")
        out[k[keep]] = self.amplitudes[keep]
        return StateVector(out, target)


# --------------------------------------------------------------------------- #
# Hamiltonians
# --------------------------------------------------------------------------- #

def _reference_occupation(params: CpbParams, U1: Optional[float], U2: Optional[float]) -> float:
    if U1 is None and U2 is None:
        return params.n_bar
    n_bar = ((U2 or 0.0) - (U1 or 0.0)) / (4.0 * params.E_C)
    if not 0.0 <= n_bar <= params.N:
        raise ParameterError(f"(U2 - U1)/(4 E_C) = {n_bar} lies outside [0, N={params.N}]")
    return n_bar


def build_two_mode_restricted(
    params: CpbParams,
    U1: Optional[float] = None,
    U2: Optional[float] = None,
    literal: bool = False,
) -> HamiltonianMatrix:
    """H'_2mod on the N+1 states of fixed total number, constant dropped.

    With U1/U2 given, n_bar = (U2 - U1) / (4 E_C); otherwise params.n_bar.
    The hopping is the exact element <k+1| -K(a1 a2^+ + a1^+ a2) |k> =
    -K sqrt((k+1)(N-k)). literal=True takes the printed, non-Hermitian rule
    (-K sqrt(k(N-k)) in both directions) through the diagonal similarity that
    symmetrizes it, which keeps its spectrum.
    """
    N = params.N
    n_bar = _reference_occupation(params, U1, U2)
    k = np.arange(N + 1, dtype=float)
    diag = params.E_C * (k - n_bar) ** 2
    kk = k[:-1]
    if literal:
        off = -params.K * (kk * (N - kk) * (kk + 1.0) * (N - kk - 1.0)) ** 0.25
    else:
        off = -params.K * np.sqrt((kk + 1.0) * (N - kk))
    return HamiltonianMatrix(diag, off, 0.0, Basis.number(N))


def two_mode_offset(params: CpbParams, U1: float, U2: float) -> float:
    """Constant dropped by build_two_mode_restricted: U2 N / 2 - E_C n_bar^2."""
    n_bar = (U2 - U1) / (4.0 * params.E_C)
    return 0.5 * U2 * params.N - params.E_C * n_bar**2


def two_mode_dense(params: CpbParams, U1: float, U2: float) -> np.ndarray:
    """Full H_2mod from explicit a1, a2 matrices, restricted to n1 + n2 = N.

    Rows/columns are ordered by k = n1. Brute force, meant for small N.
    """
    N = params.N
    dim = N + 1
    a = np.diag(np.sqrt(np.arange(1.0, dim)), 1)
    eye = np.eye(dim)
    a1 = np.kron(a, eye)
    a2 = np.kron(eye, a)
    n1 = a1.T @ a1
    n2 = a2.T @ a2
    H = (params.E_C * n1 @ n1 + 0.5 * (U1 * n1 + U2 * n2)
         - params.K * (a1 @ a2.T + a1.T @ a2))
    # |n1, n2> sits at index n1 * dim + n2
    sector = [k * dim + (N - k) for k in range(dim)]
    return H[np.ix_(sector, sector)]


def build_bose_hubbard(params: CpbParams) -> HamiltonianMatrix:
    """H_B-H: hopping replaced by the constant E_J, with |N+1> = |0>."""
    N = params.N
    k = np.arange(N + 1, dtype=float)
    diag = params.E_C * (k - params.n_bar) ** 2
    off = np.full(N, -params.E_J)
    return HamiltonianMatrix(diag, off, -params.E_J, Basis.number(N))


def build_oscillator_hamiltonian(
    params: CpbParams,
    cutoff: Optional[int] = None,
    k_min: int = 0,
    check_tail: bool = True,
) -> HamiltonianMatrix:
    """H_b = E_C (b^+ b - n_bar)^2 - (E_J / sqrt(n_bar)) (b + b^+) on Fock states k_min..cutoff.

    A positive k_min keeps only a window around n_bar, which is how n_bar ~ 1e4
    and beyond stays tractable. The ground state must vanish (below 1e-8) at
    the edges of the kept range.
    """
    n_bar = params.n_bar
    if n_bar <= 0:
        raise ParameterError("H_b needs n_bar > 0")
    spread = 10.0 * math.sqrt(n_bar)
    if cutoff is None:
        cutoff = default_cutoff(n_bar)
    if cutoff <= n_bar + spread:
        raise ParameterError(
            f"cutoff={cutoff} must exceed n_bar + 10 sqrt(n_bar) = {n_bar + spread:.1f}; "
            f"try {default_cutoff(n_bar)}"
        )
    if k_min < 0 or (k_min > 0 and k_min >= n_bar - spread):
        raise ParameterError(f"k_min={k_min} must be 0 or below n_bar - 10 sqrt(n_bar) = {n_bar - spread:.1f}")

    k = np.arange(k_min, cutoff + 1, dtype=float)
    diag = params.E_C * (k - n_bar) ** 2
    off = -(params.E_J / math.sqrt(n_bar)) * np.sqrt(k[:-1] + 1.0)
    H = HamiltonianMatrix(diag, off, 0.0, Basis.fock(cutoff, k_min))

    if check_tail and params.E_J > 0:
        _, (ground,) = eigensolve(H, 1)
        edge = abs(ground.amplitudes[-1])
        if k_min > 0:
            edge = max(edge, abs(ground.amplitudes[0]))
        if edge > TAIL_AMPLITUDE:
            raise TruncationError(
                f"ground-state amplitude {edge:.2e} at the edge of {H.basis}; raise the cutoff"
            )
    return H


# --------------------------------------------------------------------------- #
# spectra and evolution
# --------------------------------------------------------------------------- #

def _lapack_failure(exc: Exception, what: str) -> ConvergenceError:
    # scipy puts the LAPACK info either as "info=N" or as the leading count of the message
    m = re.search(r"info=(-?\d+)", str(exc)) or re.search(r"(\d+)", str(exc))
    return ConvergenceError(what, int(m.group(1)) if m else None)


def eigensolve(H: HamiltonianMatrix, count: int) -> Tuple[np.ndarray, List[StateVector]]:
    """Lowest `count` eigenpairs, ascending.

    Open-boundary matrices above BANDED_ABOVE go through the tridiagonal
    solver (bisection + inverse iteration); everything else is dense.
    """
    n = H.dimension
    if not 1 <= count <= n:
        raise ParameterError(f"count must be in [1, {n}], got {count}")
    try:
        if H.is_tridiagonal and n > BANDED_ABOVE:
            w, v = la.eigh_tridiagonal(
                H.diagonal, H.off_diagonal, select="i", select_range=(0, count - 1), check_finite=False
            )
        else:
            w, v = la.eigh(H.to_dense(), subset_by_index=[0, count - 1], check_finite=False)
    except (la.LinAlgError, np.linalg.LinAlgError) as exc:
        raise _lapack_failure(exc, f"eigensolver did not converge on dimension {n}") from exc

    scale = max(H.norm(), 1e-300)
    for j in range(w.size):
        r = np.linalg.norm(H.matvec(v[:, j]) - w[j] * v[:, j])
        if r > 1e-9 * scale:
            raise ConvergenceError(f"residual {r:.2e} for eigenvalue #{j} exceeds 1e-9 ||H|| = {1e-9 * scale:.2e}")
    gram = v.T @ v
    if np.max(np.abs(gram - np.eye(w.size)), initial=0.0) > 1e-9:
        raise ConvergenceError("eigenvectors lost orthonormality beyond 1e-9")
    return w, [StateVector(v[:, j], H.basis) for j in range(w.size)]


def eigenvalues(H: HamiltonianMatrix, count: int) -> np.ndarray:
    """Lowest `count` eigenvalues only."""
    n = H.dimension
    if not 1 <= count <= n:
        raise ParameterError(f"count must be in [1, {n}], got {count}")
    try:
        if H.is_tridiagonal:
            return la.eigvalsh_tridiagonal(
                H.diagonal, H.off_diagonal, select="i", select_range=(0, count - 1), check_finite=False
            )
        return la.eigh(H.to_dense(), eigvals_only=True, subset_by_index=[0, count - 1], check_finite=False)
    except (la.LinAlgError, np.linalg.LinAlgError) as exc:
        raise _lapack_failure(exc, f"eigensolver did not converge on dimension {n}") from exc


def evolve_state(H: HamiltonianMatrix, state: StateVector, times: Sequence[float]) -> List[StateVector]:
    """exp(-i H t)|state> for each t, through the full eigendecomposition of H."""
    if state.basis != H.basis:
        raise BasisMismatchError(f"state basis {state.basis} vs Hamiltonian basis {H.basis}")
    try:
        if H.is_tridiagonal:
            w, v = la.eigh_tridiagonal(H.diagonal, H.off_diagonal, check_finite=False)
        else:
            w, v = la.eigh(H.to_dense(), check_finite=False)
    except (la.LinAlgError, np.linalg.LinAlgError) as exc:
        raise _lapack_failure(exc, f"eigendecomposition failed on dimension {H.dimension}") from exc
    c = v.T @ state.amplitudes
    return [StateVector(v @ (np.exp(-1j * w * t) * c), H.basis) for t in times]


# --------------------------------------------------------------------------- #
# product and coherent states
# --------------------------------------------------------------------------- #

def binomial_product_state(N: int, n1: float, theta: float) -> StateVector:
    """The N-fold product state in the |k> basis: sqrt(Binom(k; N, n1/N)) e^{-ik theta}."""
    if not 0.0 < n1 < N:
        raise ParameterError(f"n1 must lie in (0, N={N}), got {n1}")
    k = np.arange(N + 1)
    amp = np.sqrt(binom.pmf(k, N, n1 / N)) * np.exp(-1j * k * theta)
    return StateVector(amp, Basis.number(N))


def coherent_vector(n1: float, theta: float, cutoff: Optional[int] = None, k_min: int = 0) -> StateVector:
    """|sqrt(n1) e^{-i theta}> on Fock states k_min..cutoff, renormalized after truncation."""
    if not (math.isfinite(n1) and n1 > 0):
        raise ParameterError(f"n1 must be > 0, got {n1}")
    if cutoff is None:
        cutoff = default_cutoff(n1)
    if cutoff <= n1 + 10.0 * math.sqrt(n1):
        raise ParameterError(f"cutoff={cutoff} must exceed n1 + 10 sqrt(n1); try {default_cutoff(n1)}")
    if k_min < 0 or k_min > cutoff:
        raise ParameterError(f"k_min={k_min} out of range")
    k = np.arange(k_min, cutoff + 1, dtype=float)
    # log-space: k! overflows past k ~ 170
    log_amp = 0.5 * (k * math.log(n1) - gammaln(k + 1.0) - n1)
    amp = np.exp(log_amp)
    edge = amp[-1] if k_min == 0 else max(amp[-1], amp[0])
    if edge > TAIL_AMPLITUDE:
        raise TruncationError(f"coherent amplitude {edge:.2e} at the edge of k={k_min}..{cutoff}")
    amp = amp * np.exp(-1j * k * theta)
    return StateVector(amp, Basis.fock(cutoff, k_min)).normalized()


def overlap(a: StateVector, b: StateVector) -> complex:
    """<a|b>."""
    if a.basis != b.basis:
        raise BasisMismatchError(f"overlap of states on {a.basis} and {b.basis}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def number_moments(state: StateVector) -> Tuple[float, float]:
    """Mean and variance of the label k (n_1, or b^+ b) in `state`."""
    p = state.probabilities
    total = p.sum()
    k = state.labels.astype(float)
    mean = float(np.dot(k, p) / total)
    var = float(np.dot((k - mean) ** 2, p) / total)
    return mean, var


def apply_annihilation(state: StateVector) -> StateVector:
    """b|state> on the same (truncated) basis: (b v)_k = sqrt(k+1) v_{k+1}."""
    if state.basis.kind not in ("number", "fock"):
        raise BasisMismatchError(f"b is not defined on {state.basis}")
    a = state.amplitudes
    out = np.zeros_like(a)
    out[:-1] = np.sqrt(state.labels[:-1] + 1.0) * a[1:]
    return StateVector(out, state.basis)


def annihilation_expectation(state: StateVector) -> complex:
    """<state| b |state> for a normalized state."""
    return complex(np.vdot(state.amplitudes, apply_annihilation(state).amplitudes))
