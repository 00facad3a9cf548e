"""Open-system stability of the oscillator H_b.

Lindblad loss (gamma) and return (delta) of condensate pairs on a truncated
Fock space, the closed-form initial fidelity decay rate, and Gibbs number
fluctuations.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .bose_hubbard import HamiltonianMatrix, StateVector, annihilation_expectation, number_moments
from .errors import BasisMismatchError, ParameterError, PositivityError, StepSizeError, TruncationError, TruncationWarning
from .utils import default_cutoff

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
EIGEN_FLOOR = -1e-8
ABORT_NEGATIVITY = 1e-6
LEAK_WARN = 1e-8
LEAK_ABORT = 1e-6


@dataclass(frozen=True)
class LindbladParams:
    gamma: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        for name, v in (("gamma", self.gamma), ("delta", self.delta)):
            if not (math.isfinite(v) and v >= 0):
                raise ParameterError(f"{name} must be finite and >= 0, got {v}")


def _fock_operators(dim: int):
    b = np.diag(np.sqrt(np.arange(1.0, dim)), 1).astype(complex)
    return b, b.conj().T


@dataclass(frozen=True)
class DensityMatrix:
    """Density matrix on Fock states 0..cutoff."""

    entries: np.ndarray
    check: bool = True

    def __post_init__(self):
        rho = np.array(self.entries, dtype=complex)
        n = rho.shape[0]
        if rho.ndim != 2 or rho.shape != (n, n) or n < 1:
            raise ParameterError("density matrix must be square")
        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)
        if self.check:
            problems = self.problems()
            if problems:
                raise ParameterError("; ".join(problems))

    def problems(self):
        rho = self.entries
        out = []
        herm = np.max(np.abs(rho - rho.conj().T))
        if herm > HERMITIAN_TOL:
            out.append(f"not Hermitian (deviation {herm:.2e})")
        if abs(self.trace - 1.0) > TRACE_TOL:
            out.append(f"trace {self.trace:.12f} is not 1")
        lo = self.min_eigenvalue
        if lo < EIGEN_FLOOR:
            out.append(f"minimum eigenvalue {lo:.2e} below {EIGEN_FLOOR:g}")
        return out

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityMatrix":
        if state.basis.kind not in ("fock", "number") or state.basis.k_min != 0:
            raise BasisMismatchError(f"density matrices live on Fock states from 0, got {state.basis}")
        a = state.normalized().amplitudes
        return cls(np.outer(a, a.conj()))

    @property
    def cutoff(self) -> int:
        return self.entries.shape[0] - 1

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    @property
    def purity(self) -> float:
        rho = self.entries
        return float(np.vdot(rho, rho).real)

    @property
    def min_eigenvalue(self) -> float:
        rho = self.entries
        return float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])

    @property
    def populations(self) -> np.ndarray:
        return np.diag(self.entries).real.copy()

    @property
    def mean_number(self) -> float:
        return float(np.dot(np.arange(self.cutoff + 1), self.populations))

    def expect(self, op) -> complex:
        return complex(np.trace(np.asarray(op) @ self.entries))

    def fidelity(self, state: StateVector) -> float:
        """<phi| rho |phi>."""
        if state.dimension != self.cutoff + 1:
            raise BasisMismatchError(f"state of dimension {state.dimension} vs cutoff {self.cutoff}")
        a = state.amplitudes
        return float(np.vdot(a, self.entries @ a).real)


def _leakage(rho: np.ndarray) -> float:
    d = np.diag(rho).real
    return float(d[-2:].sum()) if d.size >= 2 else float(d.sum())


def dissipator(rho: Union[DensityMatrix, np.ndarray], L: LindbladParams, warn: bool = True) -> np.ndarray:
    """(gamma/2)([b rho, b+] + [b, rho b+]) + (delta/2)([b+ rho, b] + [b+, rho b]).

    Computed with truncated b, so the trace of the result vanishes exactly.
    """
    r = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    if warn and _leakage(r) > LEAK_WARN:
        warnings.warn(f"population {_leakage(r):.2e} in the top two Fock levels; raise the cutoff",
                      TruncationWarning, stacklevel=2)
    b, bd = _fock_operators(r.shape[0])
    out = np.zeros_like(r)
    if L.gamma:
        n = bd @ b
        out += L.gamma * (b @ r @ bd - 0.5 * (n @ r + r @ n))
    if L.delta:
        m = b @ bd
        out += L.delta * (bd @ r @ b - 0.5 * (m @ r + r @ m))
    return out


def _dense_hamiltonian(H, dim: int) -> Optional[np.ndarray]:
    if H is None:
        return None
    if isinstance(H, HamiltonianMatrix):
        if H.basis.kind not in ("fock", "number") or H.basis.k_min != 0:
            raise BasisMismatchError(f"master equation needs a Fock basis from 0, got {H.basis}")
        M = H.to_dense()
    else:
        M = np.asarray(H)
    if M.shape != (dim, dim):
        raise BasisMismatchError(f"Hamiltonian of shape {M.shape} vs density matrix dimension {dim}")
    return M.astype(complex)


@dataclass(frozen=True)
class MasterTrajectory:
    t: np.ndarray
    states: np.ndarray
    fidelity: np.ndarray
    trace: np.ndarray
    purity: np.ndarray
    mean_number: np.ndarray

    def state(self, i: int) -> DensityMatrix:
        return DensityMatrix(self.states[i], check=False)

    def to_columns(self):
        header = ["t", "fidelity", "trace", "purity", "mean_number"]
        cols = (self.t, self.fidelity, self.trace, self.purity, self.mean_number)
        return header, [list(map(float, r)) for r in zip(*cols)]


def evolve_master(
    rho0: DensityMatrix,
    H,
    L: LindbladParams,
    t_end: float,
    dt: float,
    stride: int = 1,
    reference: Optional[StateVector] = None,
) -> MasterTrajectory:
    """RK4 for d rho/dt = -i[H, rho] + dissipator(rho), symmetrized every step.

    H is a HamiltonianMatrix on the same Fock states, a dense matrix, or None.
    Fidelity is against `reference`, or Tr(rho0 rho(t)) when none is given.
    Aborts when negativity or leaked population passes 1e-6.
    """
    if not (math.isfinite(t_end) and t_end >= 0):
        raise ParameterError(f"t_end must be >= 0, got {t_end}")
    if not (math.isfinite(dt) and dt > 0):
        raise StepSizeError(f"dt must be > 0, got {dt}")
    rho = np.array(rho0.entries, dtype=complex)
    dim = rho.shape[0]
    Hd = _dense_hamiltonian(H, dim)
    b, bd = _fock_operators(dim)
    n_op = bd @ b
    m_op = b @ bd
    ref = rho0.entries if reference is None else DensityMatrix.from_state(reference).entries

    h_scale = float(np.max(np.abs(np.linalg.eigvalsh(Hd)))) if Hd is not None else 0.0
    scale = 2.0 * h_scale + (L.gamma + L.delta) * dim
    if dt * scale > 2.5:
        raise StepSizeError(f"dt={dt} too large for RK4: dt * rate scale = {dt * scale:.3g}")

    def rhs(r):
        out = np.zeros_like(r)
        if Hd is not None:
            out += -1j * (Hd @ r - r @ Hd)
        if L.gamma:
            out += L.gamma * (b @ r @ bd - 0.5 * (n_op @ r + r @ n_op))
        if L.delta:
            out += L.delta * (bd @ r @ b - 0.5 * (m_op @ r + r @ m_op))
        return out

    warned = False

    def record(r):
        nonlocal warned
        leak = _leakage(r)
        if leak > LEAK_ABORT:
            raise TruncationError(f"population {leak:.2e} reached the top of the Fock space (cutoff {dim - 1})")
        if leak > LEAK_WARN and not warned:
            warned = True
            warnings.warn(f"population {leak:.2e} in the top two Fock levels; raise the cutoff",
                          TruncationWarning, stacklevel=3)
        lo = float(np.linalg.eigvalsh(r)[0])
        if lo < -ABORT_NEGATIVITY:
            raise PositivityError(f"density matrix eigenvalue {lo:.2e} below -{ABORT_NEGATIVITY:g}; reduce dt")
        states.append(r.copy())
        fid.append(float(np.vdot(ref, r).real))
        tr.append(float(np.trace(r).real))
        pur.append(float(np.vdot(r, r).real))
        num.append(float(np.trace(n_op @ r).real))

    states, fid, tr, pur, num = [], [], [], [], []
    ts = [0.0]
    record(rho)
    steps = int(math.ceil(t_end / dt - 1e-9))
    for i in range(steps):
        k1 = rhs(rho)
        k2 = rhs(rho + 0.5 * dt * k1)
        k3 = rhs(rho + 0.5 * dt * k2)
        k4 = rhs(rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        if (i + 1) % stride == 0 or i + 1 == steps:
            ts.append((i + 1) * dt)
            record(rho)

    return MasterTrajectory(np.array(ts), np.array(states), np.array(fid), np.array(tr), np.array(pur), np.array(num))


def fidelity_decay_rate(phi: StateVector, L: LindbladParams) -> float:
    """Gamma = (gamma + delta)(<b+b> - |<b>|^2) + delta; minimal (= delta) on coherent states."""
    if abs(phi.norm() - 1.0) > 1e-8:
        raise ParameterError(f"state must be normalized (norm {phi.norm():.12f})")
    if phi.basis.kind not in ("fock", "number"):
        raise BasisMismatchError(f"Gamma needs a Fock basis, got {phi.basis}")
    mean, _ = number_moments(phi)
    b = annihilation_expectation(phi)
    return (L.gamma + L.delta) * (mean - abs(b) ** 2) + L.delta


def fidelity_slope(phi: StateVector, L: LindbladParams, h: float = 1e-7) -> float:
    """Forward-difference d<phi|rho(t)|phi>/dt at t = 0 with H = 0."""
    traj = evolve_master(DensityMatrix.from_state(phi), None, L, h, h, reference=phi)
    return (traj.fidelity[-1] - traj.fidelity[0]) / h


def lifetime_ratio(n_bar: float, L: LindbladParams) -> float:
    """Gamma(Fock state at n_bar) / Gamma(coherent, |alpha|^2 = n_bar) = ((gamma+delta) n_bar + delta) / delta."""
    if not (math.isfinite(n_bar) and n_bar >= 0):
        raise ParameterError(f"n_bar must be >= 0, got {n_bar}")
    if L.delta == 0.0:
        return math.inf
    return ((L.gamma + L.delta) * n_bar + L.delta) / L.delta


def _gibbs_weights(E_C: float, n_bar: float, kT: float, cutoff: Optional[int]):
    if not (math.isfinite(E_C) and E_C > 0):
        raise ParameterError(f"E_C must be > 0, got {E_C}")
    if not (math.isfinite(kT) and kT > 0):
        raise ParameterError(f"kT must be > 0, got {kT}")
    if not (math.isfinite(n_bar) and n_bar >= 0):
        raise ParameterError(f"n_bar must be >= 0, got {n_bar}")
    need = n_bar + 10.0 * max(1.0, math.sqrt(kT / E_C))
    if cutoff is None:
        cutoff = max(int(math.ceil(need)) + 1, default_cutoff(n_bar))
    if cutoff <= need:
        raise ParameterError(f"cutoff={cutoff} must exceed n_bar + 10 max(1, sqrt(kT/E_C)) = {need:.1f}")
    k = np.arange(cutoff + 1, dtype=float)
    x = (E_C / kT) * (k - n_bar) ** 2
    w = np.exp(-(x - x.min()))
    p = w / w.sum()
    if p[-2:].sum() > LEAK_WARN:
        warnings.warn(f"Gibbs weight {p[-2:].sum():.2e} at the cutoff", TruncationWarning, stacklevel=3)
    return k, p


def gibbs_number_stats(E_C: float, n_bar: float, kT: float, cutoff: Optional[int] = None):
    """(mean, variance) of n_1 under rho ~ exp(-(E_C/kT)(n - n_bar)^2), summed over the number basis."""
    k, p = _gibbs_weights(E_C, n_bar, kT, cutoff)
    mean = float(np.dot(k, p))
    return mean, float(np.dot((k - mean) ** 2, p))


def gibbs_state(E_C: float, n_bar: float, kT: float, cutoff: Optional[int] = None) -> DensityMatrix:
    _, p = _gibbs_weights(E_C, n_bar, kT, cutoff)
    return DensityMatrix(np.diag(p))
