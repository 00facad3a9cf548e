"""Mean-field (Gross-Pitaevskii) dynamics of one and two Cooper pair boxes.

The discrete GP flow, the reduced pendulum h = E_C xi^2 - u(t) xi - E_J cos(theta),
its coupled two-box version, reconstruction of the single-particle and
many-body states, and a few diagnostics (arcsine statistics, Lyapunov
estimate, Ehrenfest comparison against H_b).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from .bose_hubbard import (
    CpbParams,
    build_oscillator_hamiltonian,
    coherent_vector,
    evolve_state,
    number_moments,
)
from .errors import ParameterError, StepSizeError, ValidityWarning
from .utils import TWO_PI, wrap_angle

NORM_DRIFT_LIMIT = 1e-9

# Yoshida composition weights for the Stormer-Verlet step
_CBRT2 = 2.0 ** (1.0 / 3.0)
_W4 = 1.0 / (2.0 - _CBRT2)
_Y6 = (-1.17767998417887, 0.235573213359357, 0.784513610477560)
_Y6_0 = 1.0 - 2.0 * sum(_Y6)
COMPOSITIONS = {
    2: (1.0,),
    4: (_W4, -_CBRT2 * _W4, _W4),
    6: (_Y6[2], _Y6[1], _Y6[0], _Y6_0, _Y6[0], _Y6[1], _Y6[2]),
}


# --------------------------------------------------------------------------- #
# small value types
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class ControlPulse:
    """u(t): constant, gaussian_pulse (center, width) or harmonic (frequency, phase)."""

    kind: str = "constant"
    amplitude: float = 0.0
    center: float = 0.0
    width: float = 1.0
    frequency: float = 0.0
    phase: float = 0.0

    KINDS = ("constant", "gaussian_pulse", "harmonic")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ParameterError(f"control kind must be one of {self.KINDS}, got {self.kind!r}")
        if not all(math.isfinite(v) for v in (self.amplitude, self.center, self.width, self.frequency, self.phase)):
            raise ParameterError("control parameters must be finite")
        if self.kind == "gaussian_pulse" and self.width <= 0:
            raise ParameterError(f"gaussian_pulse width must be > 0, got {self.width}")
        if self.kind == "harmonic" and self.frequency < 0:
            raise ParameterError(f"harmonic frequency must be >= 0, got {self.frequency}")

    @classmethod
    def off(cls) -> "ControlPulse":
        return cls()

    @classmethod
    def from_config(cls, d: Optional[dict]) -> "ControlPulse":
        d = dict(d or {})
        return cls(
            kind=d.get("kind", "constant"),
            amplitude=float(d.get("amplitude", 0.0)),
            center=float(d.get("center", 0.0)),
            width=float(d.get("width", 1.0)),
            frequency=float(d.get("frequency", 0.0)),
            phase=float(d.get("phase", 0.0)),
        )

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant" or self.amplitude == 0.0

    @property
    def bound(self) -> float:
        return abs(self.amplitude)

    def __call__(self, t: float) -> float:
        if self.kind == "constant":
            return self.amplitude
        if self.kind == "gaussian_pulse":
            s = (t - self.center) / self.width
            return self.amplitude * math.exp(-0.5 * s * s)
        return self.amplitude * math.sin(self.frequency * t + self.phase)


@dataclass(frozen=True)
class PhasePoint:
    """theta = theta_2 - theta_1 (radians, may be unwound) and xi = n_1 - n_bar."""

    theta: float
    xi: float

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.xi)):
            raise ParameterError("phase point must be finite")

    @property
    def theta_wrapped(self) -> float:
        return float(wrap_angle(self.theta))


@dataclass(frozen=True)
class CondensateAmplitudes:
    """phi = sqrt(N) psi for the two modes, so |phi1|^2 + |phi2|^2 = N."""

    phi1: complex
    phi2: complex

    @property
    def N(self) -> float:
        return abs(self.phi1) ** 2 + abs(self.phi2) ** 2


@dataclass(frozen=True)
class GpCoefficients:
    U1: float
    U2: float
    g: float
    K: float

    @classmethod
    def from_params(cls, params: CpbParams) -> "GpCoefficients":
        """Coefficients whose flow is Hamilton's flow of classical_h1 in (theta, n1).

        Rotating frame (U2 = 0), U1 = -2 E_C n_bar, g = 2 E_C, K = -K_phys / 2; a
        control u(t) then enters as U2 = u(t).
        """
        return cls(U1=-2.0 * params.E_C * params.n_bar, U2=0.0, g=2.0 * params.E_C, K=-0.5 * params.K)


@dataclass(frozen=True)
class Trajectory:
    """Sampled run. theta is unwound; GP runs also carry the amplitudes."""

    t: np.ndarray
    theta: np.ndarray
    xi: np.ndarray
    energy: np.ndarray
    phi: Optional[np.ndarray] = None
    norm_drift: float = 0.0

    @property
    def theta_wrapped(self) -> np.ndarray:
        return wrap_angle(self.theta)

    def point(self, i: int) -> PhasePoint:
        return PhasePoint(float(self.theta[i]), float(self.xi[i]))

    def to_columns(self):
        header = ["t", "theta_wrapped", "theta_unwrapped", "xi", "energy"]
        cols = [self.t, self.theta_wrapped, self.theta, self.xi, self.energy]
        if self.phi is not None:
            header += ["abs_phi1_sq", "abs_phi2_sq"]
            cols += [np.abs(self.phi[:, 0]) ** 2, np.abs(self.phi[:, 1]) ** 2]
        rows = [list(map(float, r)) for r in zip(*cols)]
        return header, rows


@dataclass(frozen=True)
class CoupledTrajectory:
    first: Trajectory
    second: Trajectory
    energy: np.ndarray

    def to_columns(self):
        header = ["t", "theta", "xi", "theta2", "xi2", "energy"]
        cols = [self.first.t, self.first.theta, self.first.xi, self.second.theta, self.second.xi, self.energy]
        return header, [list(map(float, r)) for r in zip(*cols)]


# --------------------------------------------------------------------------- #
# classical energies and the GP field
# --------------------------------------------------------------------------- #

def classical_h1(theta: float, n1: float, params: CpbParams) -> float:
    """(g/4)(n1 - U/g)^2 - K sqrt(n1 (N - n1)) cos(theta)."""
    N = params.N
    if not 0.0 < n1 < N:
        raise ParameterError(f"n1 must lie in (0, N={N}), got {n1}")
    return 0.25 * params.g * (n1 - params.U / params.g) ** 2 - params.K * math.sqrt(n1 * (N - n1)) * math.cos(theta)


def classical_h2(phi, U1: float, U2: float, g: float, K: float) -> float:
    """U1|phi1|^2 + (g/2)|phi1|^4 + U2|phi2|^2 + K (conj(phi1) phi2 + c.c.).

    i dphi/dt = dh2/dconj(phi) is exactly gp_rhs.
    """
    p1, p2 = _pair(phi)
    n1 = abs(p1) ** 2
    return U1 * n1 + 0.5 * g * n1 * n1 + U2 * abs(p2) ** 2 + 2.0 * K * (p1.conjugate() * p2).real


def _pair(phi) -> Tuple[complex, complex]:
    if isinstance(phi, CondensateAmplitudes):
        return phi.phi1, phi.phi2
    a = np.asarray(phi, dtype=complex)
    return complex(a[0]), complex(a[1])


def gp_rhs(phi, U1: float, U2: float, g: float, K: float) -> np.ndarray:
    p1, p2 = _pair(phi)
    d1 = -1j * (U1 + g * abs(p1) ** 2) * p1 - 1j * K * p2
    d2 = -1j * U2 * p2 - 1j * K * p1
    return np.array([d1, d2], dtype=complex)


def stationary_point(params: CpbParams) -> PhasePoint:
    """Fixed point of classical_h1 at theta = 0; xi = 0 exactly when n_bar = N/2."""
    N, n_bar = params.N, params.n_bar
    if not 0.0 < n_bar < N:
        raise ParameterError("stationary point needs 0 < n_bar < N")
    half = 0.5 * N
    if n_bar == half or params.K == 0.0:
        return PhasePoint(0.0, 0.0)

    def slope(n1: float) -> float:
        return 2.0 * params.E_C * (n1 - n_bar) - params.K * (N - 2.0 * n1) / (2.0 * math.sqrt(n1 * (N - n1)))

    lo, hi = min(n_bar, half), max(n_bar, half)
    n_star = brentq(slope, lo, hi, xtol=1e-13 * N, rtol=4 * np.finfo(float).eps)
    return PhasePoint(0.0, n_star - n_bar)


def amplitudes_from_phase_point(x: PhasePoint, params: CpbParams) -> CondensateAmplitudes:
    n1 = params.n_bar + x.xi
    if not 0.0 <= n1 <= params.N:
        raise ParameterError(f"n_bar + xi = {n1} outside [0, N]")
    return CondensateAmplitudes(math.sqrt(n1) * complex(math.cos(x.theta), -math.sin(x.theta)),
                                complex(math.sqrt(params.N - n1), 0.0))


def phase_point_from_amplitudes(phi, params: CpbParams) -> PhasePoint:
    p1, p2 = _pair(phi)
    theta = float(wrap_angle(np.angle(p2) - np.angle(p1)))
    return PhasePoint(theta, abs(p1) ** 2 - params.n_bar)


# --------------------------------------------------------------------------- #
# GP integration (RK4)
# --------------------------------------------------------------------------- #

def _check_run(t_end: float, dt: float):
    if not (math.isfinite(t_end) and t_end > 0):
        raise ParameterError(f"t_end must be > 0, got {t_end}")
    if not (math.isfinite(dt) and dt > 0):
        raise StepSizeError(f"dt must be > 0, got {dt}")


def _gp_scale(c: GpCoefficients, p1: complex, N: float, u_max: float) -> float:
    return (abs(c.U1 + c.g * abs(p1) ** 2) + abs(c.U2) + u_max + abs(c.K)
            + math.sqrt(abs(c.g * c.K) * N))


def integrate_gp(
    phi0,
    params: Union[CpbParams, GpCoefficients],
    control: ControlPulse = ControlPulse(),
    t_end: float = 10.0,
    dt: float = 1e-3,
    stride: int = 1,
    n_bar: float = 0.0,
) -> Trajectory:
    """Fixed-step RK4 for gp_rhs with U2 -> U2 + u(t).

    params is either a CpbParams (coefficients from GpCoefficients.from_params,
    xi measured from params.n_bar) or explicit GpCoefficients (xi measured from
    n_bar). Norm drift is reported on the trajectory and warned about above 1e-9.
    """
    _check_run(t_end, dt)
    if isinstance(params, CpbParams):
        c = GpCoefficients.from_params(params)
        n_bar = params.n_bar
    else:
        c = params
    p1, p2 = _pair(phi0)
    N0 = abs(p1) ** 2 + abs(p2) ** 2
    scale = _gp_scale(c, p1, N0, control.bound)
    if dt * scale >= 0.1:
        raise StepSizeError(f"dt={dt} too large: dt * frequency scale = {dt * scale:.3g} must stay below 0.1")

    U1, U2, g, K = c.U1, c.U2, c.g, c.K

    def f(t, a, b):
        w2 = U2 + control(t)
        return (-1j * ((U1 + g * (a.real * a.real + a.imag * a.imag)) * a + K * b),
                -1j * (w2 * b + K * a))

    steps = int(math.ceil(t_end / dt - 1e-9))
    ts, phis, us = [0.0], [(p1, p2)], [control(0.0)]
    drift = 0.0
    for i in range(steps):
        t = i * dt
        h = dt
        k1a, k1b = f(t, p1, p2)
        k2a, k2b = f(t + 0.5 * h, p1 + 0.5 * h * k1a, p2 + 0.5 * h * k1b)
        k3a, k3b = f(t + 0.5 * h, p1 + 0.5 * h * k2a, p2 + 0.5 * h * k2b)
        k4a, k4b = f(t + h, p1 + h * k3a, p2 + h * k3b)
        p1 = p1 + (h / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        p2 = p2 + (h / 6.0) * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
        drift = max(drift, abs(abs(p1) ** 2 + abs(p2) ** 2 - N0) / N0)
        if (i + 1) % stride == 0 or i + 1 == steps:
            t_next = (i + 1) * dt
            ts.append(t_next)
            phis.append((p1, p2))
            us.append(control(t_next))

    if drift > NORM_DRIFT_LIMIT:
        warnings.warn(f"GP norm drift {drift:.2e} exceeds {NORM_DRIFT_LIMIT:g}; reduce dt", ValidityWarning, stacklevel=2)

    phi = np.array(phis, dtype=complex)
    n1 = np.abs(phi[:, 0]) ** 2
    theta = np.unwrap(np.angle(phi[:, 1]) - np.angle(phi[:, 0]))
    energy = np.array([classical_h2(p, U1, U2 + u, g, K) for p, u in zip(phi, us)])
    return Trajectory(np.array(ts), theta, n1 - n_bar, energy, phi, drift)


def coupled_stationary_occupations(U: float, U2: float, g: float, g2: float, G: float) -> Tuple[float, float]:
    """Solve U = g n + G n', U' = g' n' + G n."""
    det = g * g2 - G * G
    if abs(det) <= 1e-14 * max(abs(g * g2), G * G, 1e-300):
        raise ParameterError("g g' - G^2 vanishes; stationary occupations are not unique")
    n, n2 = np.linalg.solve(np.array([[g, G], [G, g2]], dtype=float), np.array([U, U2], dtype=float))
    return float(n), float(n2)


@dataclass(frozen=True)
class CoupledCpbParams:
    """Two boxes and the coupling G. Each box carries its stationary n_bar."""

    first: CpbParams
    second: CpbParams
    G: float

    def __post_init__(self):
        if not math.isfinite(self.G):
            raise ParameterError("G must be finite")

    @classmethod
    def from_potentials(cls, first: Tuple[float, float, int], second: Tuple[float, float, int],
                        U: float, U2: float, G: float) -> "CoupledCpbParams":
        """first/second are (E_C, K, N); U, U2 are the applied potentials."""
        (ec1, k1, n1), (ec2, k2, n2) = first, second
        nb1, nb2 = coupled_stationary_occupations(U, U2, 4.0 * ec1, 4.0 * ec2, G)
        for nb, N in ((nb1, n1), (nb2, n2)):
            if not 0.0 < nb < N:
                raise ParameterError(f"stationary occupation {nb} outside (0, {N})")
        return cls(CpbParams.from_potential(ec1, k1, n1, 4.0 * ec1 * nb1),
                   CpbParams.from_potential(ec2, k2, n2, 4.0 * ec2 * nb2), G)

    @property
    def potentials(self) -> Tuple[float, float]:
        """(U, U') that make the stored occupations stationary."""
        a, b = self.first, self.second
        return a.g * a.n_bar + self.G * b.n_bar, b.g * b.n_bar + self.G * a.n_bar


def integrate_coupled_gp(
    phi0,
    phi0_second,
    params: CoupledCpbParams,
    controls: Sequence[ControlPulse] = (ControlPulse(), ControlPulse()),
    t_end: float = 10.0,
    dt: float = 1e-3,
    stride: int = 1,
) -> Tuple[Trajectory, Trajectory]:
    """Two GP systems coupled through (G/2)|phi1|^2 |phi1'|^2.

    Coupled to the classical picture this is h + h' + (G/2) xi xi' up to constants.
    """
    _check_run(t_end, dt)
    ca, cb = GpCoefficients.from_params(params.first), GpCoefficients.from_params(params.second)
    half_G = 0.5 * params.G
    # the coupling's mean-field shift is taken out of U1
    U1a = ca.U1 - half_G * params.second.n_bar
    U1b = cb.U1 - half_G * params.first.n_bar
    a1, a2 = _pair(phi0)
    b1, b2 = _pair(phi0_second)
    Na, Nb = abs(a1) ** 2 + abs(a2) ** 2, abs(b1) ** 2 + abs(b2) ** 2
    ua, ub = controls
    scale = max(_gp_scale(replace(ca, U1=U1a + half_G * abs(b1) ** 2), a1, Na, ua.bound),
                _gp_scale(replace(cb, U1=U1b + half_G * abs(a1) ** 2), b1, Nb, ub.bound))
    if dt * scale >= 0.1:
        raise StepSizeError(f"dt={dt} too large: dt * frequency scale = {dt * scale:.3g} must stay below 0.1")

    def f(t, y):
        p1, p2, q1, q2 = y
        n1 = p1.real * p1.real + p1.imag * p1.imag
        m1 = q1.real * q1.real + q1.imag * q1.imag
        return (-1j * ((U1a + ca.g * n1 + half_G * m1) * p1 + ca.K * p2),
                -1j * ((ca.U2 + ua(t)) * p2 + ca.K * p1),
                -1j * ((U1b + cb.g * m1 + half_G * n1) * q1 + cb.K * q2),
                -1j * ((cb.U2 + ub(t)) * q2 + cb.K * q1))

    def axpy(y, h, k):
        return tuple(a + h * b for a, b in zip(y, k))

    y = (a1, a2, b1, b2)
    steps = int(math.ceil(t_end / dt - 1e-9))
    ts, ys = [0.0], [y]
    drift = 0.0
    for i in range(steps):
        t = i * dt
        k1 = f(t, y)
        k2 = f(t + 0.5 * dt, axpy(y, 0.5 * dt, k1))
        k3 = f(t + 0.5 * dt, axpy(y, 0.5 * dt, k2))
        k4 = f(t + dt, axpy(y, dt, k3))
        y = tuple(v + (dt / 6.0) * (p + 2.0 * q + 2.0 * r + s) for v, p, q, r, s in zip(y, k1, k2, k3, k4))
        drift = max(drift,
                    abs(abs(y[0]) ** 2 + abs(y[1]) ** 2 - Na) / Na,
                    abs(abs(y[2]) ** 2 + abs(y[3]) ** 2 - Nb) / Nb)
        if (i + 1) % stride == 0 or i + 1 == steps:
            ts.append((i + 1) * dt)
            ys.append(y)
    if drift > NORM_DRIFT_LIMIT:
        warnings.warn(f"GP norm drift {drift:.2e} exceeds {NORM_DRIFT_LIMIT:g}; reduce dt", ValidityWarning, stacklevel=2)

    arr = np.array(ys, dtype=complex)
    t = np.array(ts)
    out = []
    for cols, c, box, U1 in (((0, 1), ca, params.first, U1a), ((2, 3), cb, params.second, U1b)):
        phi = arr[:, cols]
        theta = np.unwrap(np.angle(phi[:, 1]) - np.angle(phi[:, 0]))
        energy = np.array([classical_h2(p, U1, c.U2, c.g, c.K) for p in phi])
        out.append(Trajectory(t, theta, np.abs(phi[:, 0]) ** 2 - box.n_bar, energy, phi, drift))
    return out[0], out[1]


# --------------------------------------------------------------------------- #
# pendulum integration (Yoshida-composed Stormer-Verlet)
# --------------------------------------------------------------------------- #

def _weights(order: int) -> Tuple[float, ...]:
    try:
        return COMPOSITIONS[order]
    except KeyError:
        raise ParameterError(f"symplectic order must be one of {sorted(COMPOSITIONS)}, got {order}") from None


def _check_pendulum_step(params: CpbParams, dt: float):
    omega = math.sqrt(2.0 * params.E_C * params.E_J)
    if omega > 0 and dt >= 0.05 / omega:
        raise StepSizeError(f"dt={dt} must stay below 0.05 / omega0 = {0.05 / omega:.3g}")


def integrate_pendulum(
    x0: PhasePoint,
    params: CpbParams,
    control: ControlPulse = ControlPulse(),
    t_end: float = 10.0,
    dt: float = 1e-3,
    stride: int = 1,
    order: int = 6,
) -> Trajectory:
    """theta' = 2 E_C xi - u(t), xi' = -E_J sin(theta); theta is never wrapped."""
    _check_run(t_end, dt)
    _check_pendulum_step(params, dt)
    weights = _weights(order)
    E_C, E_J = params.E_C, params.E_J
    sin = math.sin
    u = control

    theta, xi = float(x0.theta), float(x0.xi)
    steps = int(math.ceil(t_end / dt - 1e-9))
    ts, thetas, xis = [0.0], [theta], [xi]
    for i in range(steps):
        t = i * dt
        for w in weights:
            h = w * dt
            xi -= 0.5 * h * E_J * sin(theta)
            v = 2.0 * E_C * xi - u(t + 0.5 * h)
            theta += h * v
            xi -= 0.5 * h * E_J * sin(theta)
            t += h
        if (i + 1) % stride == 0 or i + 1 == steps:
            ts.append((i + 1) * dt)
            thetas.append(theta)
            xis.append(xi)

    t_arr, th, x = np.array(ts), np.array(thetas), np.array(xis)
    us = np.array([u(t) for t in ts])
    energy = E_C * x**2 - us * x - E_J * np.cos(th)
    return Trajectory(t_arr, th, x, energy)


def integrate_coupled(
    x0: PhasePoint,
    x0_second: PhasePoint,
    params: CoupledCpbParams,
    controls: Sequence[ControlPulse] = (ControlPulse(), ControlPulse()),
    t_end: float = 10.0,
    dt: float = 1e-3,
    stride: int = 1,
    order: int = 6,
) -> CoupledTrajectory:
    """Hamilton's equations for h + h' + (G/2) xi xi'.

    With G = 0 every step performs the same floating-point operations as
    integrate_pendulum on each box.
    """
    _check_run(t_end, dt)
    a, b = params.first, params.second
    _check_pendulum_step(a, dt)
    _check_pendulum_step(b, dt)
    weights = _weights(order)
    E_C, E_J, E_C2, E_J2 = a.E_C, a.E_J, b.E_C, b.E_J
    half_G = 0.5 * params.G
    u1, u2 = controls
    sin = math.sin

    th1, xi1, th2, xi2 = float(x0.theta), float(x0.xi), float(x0_second.theta), float(x0_second.xi)
    steps = int(math.ceil(t_end / dt - 1e-9))
    ts, rows = [0.0], [(th1, xi1, th2, xi2)]
    for i in range(steps):
        t = i * dt
        for w in weights:
            h = w * dt
            xi1 -= 0.5 * h * E_J * sin(th1)
            xi2 -= 0.5 * h * E_J2 * sin(th2)
            tm = t + 0.5 * h
            v1 = 2.0 * E_C * xi1 - u1(tm)
            v2 = 2.0 * E_C2 * xi2 - u2(tm)
            if half_G:
                v1 += half_G * xi2
                v2 += half_G * xi1
            th1 += h * v1
            th2 += h * v2
            xi1 -= 0.5 * h * E_J * sin(th1)
            xi2 -= 0.5 * h * E_J2 * sin(th2)
            t += h
        if (i + 1) % stride == 0 or i + 1 == steps:
            ts.append((i + 1) * dt)
            rows.append((th1, xi1, th2, xi2))

    t_arr = np.array(ts)
    arr = np.array(rows)
    ua = np.array([u1(t) for t in ts])
    ub = np.array([u2(t) for t in ts])
    e1 = E_C * arr[:, 1] ** 2 - ua * arr[:, 1] - E_J * np.cos(arr[:, 0])
    e2 = E_C2 * arr[:, 3] ** 2 - ub * arr[:, 3] - E_J2 * np.cos(arr[:, 2])
    total = e1 + e2 + half_G * arr[:, 1] * arr[:, 3]
    return CoupledTrajectory(Trajectory(t_arr, arr[:, 0], arr[:, 1], e1),
                             Trajectory(t_arr, arr[:, 2], arr[:, 3], e2), total)


def coupled_normal_modes(params: CoupledCpbParams) -> np.ndarray:
    """Small-oscillation angular frequencies of the coupled pendula, ascending."""
    a, b = params.first, params.second
    half_G = 0.5 * params.G
    # state (theta, xi, theta', xi'), linearized at the origin
    J = np.array([
        [0.0, 2.0 * a.E_C, 0.0, half_G],
        [-a.E_J, 0.0, 0.0, 0.0],
        [0.0, half_G, 0.0, 2.0 * b.E_C],
        [0.0, 0.0, -b.E_J, 0.0],
    ])
    w = np.abs(np.linalg.eigvals(J).imag)
    return np.unique(np.round(np.sort(w), 12))


def lyapunov_exponent(
    x0: PhasePoint,
    params: CpbParams,
    control: ControlPulse = ControlPulse(),
    t_end: float = 100.0,
    dt: float = 1e-3,
    d0: float = 1e-8,
    renorm_every: int = 10,
    order: int = 6,
) -> float:
    """Largest Lyapunov exponent of the driven pendulum by two-trajectory divergence.

    The distance uses theta and xi / lambda with lambda = sqrt(E_J / (2 E_C)).
    """
    _check_run(t_end, dt)
    _check_pendulum_step(params, dt)
    weights = _weights(order)
    E_C, E_J, u, sin = params.E_C, params.E_J, control, math.sin
    lam = math.sqrt(E_J / (2.0 * E_C)) if E_J > 0 else 1.0

    def advance(theta, xi, t):
        for w in weights:
            h = w * dt
            xi -= 0.5 * h * E_J * sin(theta)
            theta += h * (2.0 * E_C * xi - u(t + 0.5 * h))
            xi -= 0.5 * h * E_J * sin(theta)
            t += h
        return theta, xi

    a_th, a_xi = float(x0.theta), float(x0.xi)
    b_th, b_xi = a_th + d0, a_xi
    steps = int(math.ceil(t_end / dt - 1e-9))
    log_sum = 0.0
    for i in range(steps):
        t = i * dt
        a_th, a_xi = advance(a_th, a_xi, t)
        b_th, b_xi = advance(b_th, b_xi, t)
        if (i + 1) % renorm_every == 0 or i + 1 == steps:
            dth, dxi = b_th - a_th, (b_xi - a_xi) / lam
            d = math.hypot(dth, dxi)
            if d == 0.0:
                continue
            log_sum += math.log(d / d0)
            b_th = a_th + dth * d0 / d
            b_xi = a_xi + dxi * lam * d0 / d
    return log_sum / (steps * dt)


# --------------------------------------------------------------------------- #
# state reconstruction and entanglement
# --------------------------------------------------------------------------- #

def _validity(x: PhasePoint, params: CpbParams):
    if not 0.0 < params.n_bar < params.N:
        raise ParameterError("state reconstruction needs 0 < n_bar < N")
    if abs(x.xi) > 0.1 * params.n_bar:
        warnings.warn(f"|xi|={abs(x.xi):g} beyond 0.1 n_bar={0.1 * params.n_bar:g}; linearized state is unreliable",
                      ValidityWarning, stacklevel=3)


def _chi(params: CpbParams) -> Tuple[np.ndarray, np.ndarray]:
    N, n = params.N, params.n_bar
    r = 1.0 / math.sqrt(N)
    chi0 = r * np.array([math.sqrt(n), math.sqrt(N - n)], dtype=complex)
    chi1 = r * np.array([math.sqrt(N - n), -math.sqrt(n)], dtype=complex)
    if abs(np.vdot(chi0, chi1)) > 1e-12:
        raise ParameterError("chi0 and chi1 are not orthogonal")
    return chi0, chi1


def _linear_coefficient(xi: float, params: CpbParams) -> float:
    return xi / (2.0 * math.sqrt((params.N - params.n_bar) * params.n_bar))


def _single_particle(theta: float, c: float, params: CpbParams) -> np.ndarray:
    chi0, chi1 = _chi(params)
    psi = np.array([complex(math.cos(theta), -math.sin(theta)), 1.0]) * (chi0 + c * chi1)
    return psi / np.linalg.norm(psi)


def reconstruct_single_particle(x: PhasePoint, params: CpbParams) -> np.ndarray:
    """psi = W(theta)[chi0 + xi / (2 sqrt((N - n_bar) n_bar)) chi1], normalized."""
    _validity(x, params)
    return _single_particle(x.theta_wrapped, _linear_coefficient(x.xi, params), params)


@dataclass(frozen=True)
class MeanFieldManyBodyState:
    """W(theta)^N [Phi_0 + epsilon Phi_1], with Phi_1 one particle promoted to chi1."""

    theta: float
    epsilon: float
    params: CpbParams

    @property
    def norm_squared(self) -> float:
        return 1.0 + self.epsilon**2

    @property
    def coefficients(self) -> np.ndarray:
        """Normalized amplitudes on (Phi_0, Phi_1)."""
        return np.array([1.0, self.epsilon]) / math.sqrt(self.norm_squared)

    def single_particle(self) -> np.ndarray:
        return _single_particle(self.theta, self.epsilon / math.sqrt(self.params.N), self.params)

    @property
    def mean_occupation(self) -> float:
        """<n_1> = N |psi_1|^2."""
        return self.params.N * abs(self.single_particle()[0]) ** 2

    @property
    def excess_charge(self) -> float:
        """Island charge relative to the reference, in units of e (2e per pair)."""
        xi = self.epsilon * 2.0 * math.sqrt((self.params.N - self.params.n_bar) * self.params.n_bar) / math.sqrt(self.params.N)
        return 2.0 * xi


def manybody_state(x: PhasePoint, params: CpbParams) -> MeanFieldManyBodyState:
    _validity(x, params)
    eps = x.xi * math.sqrt(params.N) / (2.0 * math.sqrt((params.N - params.n_bar) * params.n_bar))
    return MeanFieldManyBodyState(x.theta_wrapped, eps, params)


def entanglement_entropy(coefficients) -> float:
    """Von Neumann entropy (natural log) of a bipartite pure state's coefficient matrix."""
    C = np.asarray(coefficients, dtype=complex)
    s = np.linalg.svd(C, compute_uv=False)
    p = s**2
    total = p.sum()
    if total == 0.0:
        raise ParameterError("zero coefficient matrix")
    p = p / total
    p = p[p > 1e-300]
    return float(max(0.0, -np.sum(p * np.log(p))))


def product_entanglement(a: MeanFieldManyBodyState, b: MeanFieldManyBodyState) -> float:
    """Entropy of Psi (x) Psi' in the {Phi_0, Phi_1} (x) {Phi_0', Phi_1'} description."""
    return entanglement_entropy(np.outer(a.coefficients, b.coefficients))


# --------------------------------------------------------------------------- #
# statistics
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    density: np.ndarray


def arcsine_histogram(source, component: str = "xi", bins: int = 50, min_samples: int = 10_000) -> Histogram:
    """Time-averaged density of theta or xi, rescaled so the extremes sit at -1 and 1."""
    if isinstance(source, Trajectory):
        if component not in ("theta", "xi"):
            raise ParameterError(f"component must be 'theta' or 'xi', got {component!r}")
        x = np.asarray(getattr(source, component), dtype=float)
    else:
        x = np.asarray(source, dtype=float)
    if x.size < min_samples:
        raise ParameterError(f"need at least {min_samples} samples, got {x.size}")
    lo, hi = float(x.min()), float(x.max())
    if hi == lo:
        return Histogram(np.array([lo - 0.5, lo + 0.5]), np.array([1.0]))
    z = (x - 0.5 * (hi + lo)) / (0.5 * (hi - lo))
    density, edges = np.histogram(z, bins=bins, range=(-1.0, 1.0), density=True)
    return Histogram(edges, density)


def arcsine_l1_distance(hist: Histogram) -> float:
    """L1 distance between a histogram on [-1, 1] and p(x) = 1 / (pi sqrt(1 - x^2))."""
    a, b = hist.edges[:-1], hist.edges[1:]
    exact = (np.arcsin(np.clip(b, -1, 1)) - np.arcsin(np.clip(a, -1, 1))) / math.pi
    return float(np.sum(np.abs(hist.density * (b - a) - exact)))


# --------------------------------------------------------------------------- #
# quantum vs classical
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class EhrenfestResult:
    t: np.ndarray
    quantum_xi: np.ndarray
    classical_xi: np.ndarray
    n_eq: float
    E_C_eff: float
    E_J_eff: float

    @property
    def amplitude(self) -> float:
        return float(np.max(np.abs(self.classical_xi)))

    @property
    def relative_deviation(self) -> float:
        return float(np.max(np.abs(self.quantum_xi - self.classical_xi)) / self.amplitude)

    def to_columns(self):
        header = ["t", "quantum_xi", "classical_xi"]
        return header, [list(map(float, r)) for r in zip(self.t, self.quantum_xi, self.classical_xi)]


def oscillator_equilibrium(params: CpbParams) -> Tuple[float, float, float]:
    """Equilibrium occupation and local pendulum energies of H_b read semiclassically.

    With b = sqrt(n) e^{-i theta}, H_b becomes E_C (n - n_bar + 1/2)^2 -
    2 E_J sqrt(n / n_bar) cos(theta). Returns (n_eq, E_C_eff, E_J_eff) at its
    theta = 0 minimum.
    """
    E_C, E_J, n_bar = params.E_C, params.E_J, params.n_bar
    if n_bar <= 0 or E_J <= 0:
        raise ParameterError("the H_b equilibrium needs n_bar > 0 and E_J > 0")

    def slope(n: float) -> float:
        return 2.0 * E_C * (n - n_bar + 0.5) - E_J / math.sqrt(n * n_bar)

    hi = n_bar + E_J / (E_C * n_bar) + 1.0
    n_eq = brentq(slope, max(n_bar - 1.0, 0.5 * n_bar), hi, xtol=1e-10)
    E_C_eff = E_C + E_J / (4.0 * n_eq**1.5 * math.sqrt(n_bar))
    E_J_eff = 2.0 * E_J * math.sqrt(n_eq / n_bar)
    return n_eq, E_C_eff, E_J_eff


def ehrenfest_comparison(
    params: CpbParams,
    theta0: float,
    periods: float = 3.0,
    samples: int = 60,
    substeps: int = 64,
) -> EhrenfestResult:
    """<n - n_eq> under H_b from a coherent state next to the matching pendulum's xi(t).

    The quantum run uses a Fock window around the equilibrium occupation and
    exact evolution; the pendulum gets the local E_C and E_J of H_b there.
    """
    n_eq, E_C_eff, E_J_eff = oscillator_equilibrium(params)
    omega = math.sqrt(2.0 * E_C_eff * E_J_eff)
    lam = math.sqrt(E_J_eff / (2.0 * E_C_eff))
    amp = lam * math.sqrt(2.0 * (1.0 - math.cos(theta0)))
    margin = int(math.ceil(1.5 * amp + 14.0 * math.sqrt(n_eq))) + 50
    k_min = max(0, int(math.floor(n_eq)) - margin)
    cutoff = int(math.ceil(n_eq)) + margin

    H = build_oscillator_hamiltonian(params, cutoff=cutoff, k_min=k_min)
    psi0 = coherent_vector(n_eq, theta0, cutoff=cutoff, k_min=k_min)
    t_end = periods * TWO_PI / omega
    times = np.linspace(0.0, t_end, samples + 1)
    quantum = np.array([number_moments(s)[0] - n_eq for s in evolve_state(H, psi0, times)])

    local = CpbParams.from_josephson(E_C_eff, E_J_eff, int(2 * math.ceil(n_eq)) + 2, n_eq)
    dt = t_end / (samples * substeps)
    traj = integrate_pendulum(PhasePoint(theta0, 0.0), local, ControlPulse.off(), t_end, dt, stride=substeps)
    return EhrenfestResult(times, quantum, traj.xi[: samples + 1], n_eq, E_C_eff, E_J_eff)
