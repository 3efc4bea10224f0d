"""
Lindblad master-equation integration of a register under a pulse schedule.

Collapse operators per qubit q:
    sigma_minus^(q)  at rate 1/T1
    sigma_z^(q)      at rate 1/(2 Tphi)    (coherence decays as e^{-t/Tphi})
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.linalg import expm

from services.exceptions import ConfigError, DimensionError, NumericalError
from services.hamiltonian import SystemSpec, build_hamiltonian, peak_drive_frequency, static_hamiltonian
from services.pulses import PulseSchedule, rotation_unitary
from services.qcore import SIGMA_MINUS, SIGMA_Z, dagger, embed, num_qubits, symmetrize

logger = logging.getLogger(__name__)

METHODS = ("rk4", "hybrid")
TRACE_DRIFT_TOL = 1e-9
ABORT_TOL = 1e-6
DT_SAFETY = 20.0


@dataclass(frozen=True)
class IntegratorConfig:
    dt_s: float = 0.2e-9
    method: str = "hybrid"
    sample_stride: int = 50

    def __post_init__(self):
        if not self.dt_s > 0:
            raise ConfigError("integrator.dt_ns", "must be positive")
        if self.method not in METHODS:
            raise ConfigError("integrator.method", f"must be one of {METHODS}")
        if self.sample_stride < 1:
            raise ConfigError("integrator.sample_stride", "must be >= 1")


@dataclass
class EvolutionResult:
    times: np.ndarray
    states: List[np.ndarray] = field(default_factory=list)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def __len__(self) -> int:
        return len(self.states)


def collapse_operators(spec: SystemSpec) -> List[Tuple[float, np.ndarray]]:
    """(rate, operator) pairs for every non-zero noise channel."""
    jumps = []
    n = spec.n_qubits
    for q, noise in enumerate(spec.noise):
        if noise.gamma1 > 0:
            jumps.append((noise.gamma1, embed(SIGMA_MINUS, q, n)))
        if noise.gamma_phi > 0:
            jumps.append((0.5 * noise.gamma_phi, embed(SIGMA_Z, q, n)))
    return jumps


def _rhs(rho: np.ndarray, h: np.ndarray, jumps: List[Tuple[float, np.ndarray, np.ndarray, np.ndarray]]) -> np.ndarray:
    drho = -1j * (h @ rho - rho @ h)
    for rate, c, cd, cdc in jumps:
        drho += rate * (c @ rho @ cd - 0.5 * (cdc @ rho + rho @ cdc))
    return drho


def _prepared_jumps(spec: SystemSpec):
    return [(rate, c, dagger(c), dagger(c) @ c) for rate, c in collapse_operators(spec)]


def lindblad_rhs(rho: np.ndarray, h: np.ndarray, spec: SystemSpec) -> np.ndarray:
    """
    Right-hand side of the master equation.

    -i[H, rho] + sum_k rate_k (L rho L^dagger - {L^dagger L, rho} / 2)
    """
    rho = np.asarray(rho, dtype=complex)
    h = np.asarray(h, dtype=complex)
    n = num_qubits(rho)
    if h.shape != rho.shape or n != spec.n_qubits:
        raise DimensionError(f"Dimension mismatch: rho {rho.shape}, H {h.shape}, spec {spec.n_qubits} qubits")
    return _rhs(rho, h, _prepared_jumps(spec))


def liouvillian(h: np.ndarray, spec: SystemSpec) -> np.ndarray:
    """Superoperator acting on row-major vec(rho)."""
    d = h.shape[0]
    eye = np.eye(d, dtype=complex)
    sup = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for rate, c in collapse_operators(spec):
        cdc = dagger(c) @ c
        sup += rate * (np.kron(c, c.conj()) - 0.5 * np.kron(cdc, eye) - 0.5 * np.kron(eye, cdc.T))
    return sup


def rk4_step(rho: np.ndarray, t: float, h_step: float, spec: SystemSpec, schedule: PulseSchedule,
             static: np.ndarray, jumps) -> np.ndarray:
    h0 = build_hamiltonian(spec, schedule, t, static)
    hm = build_hamiltonian(spec, schedule, t + 0.5 * h_step, static)
    h1 = build_hamiltonian(spec, schedule, t + h_step, static)
    k1 = _rhs(rho, h0, jumps)
    k2 = _rhs(rho + 0.5 * h_step * k1, hm, jumps)
    k3 = _rhs(rho + 0.5 * h_step * k2, hm, jumps)
    k4 = _rhs(rho + h_step * k3, h1, jumps)
    return rho + (h_step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def max_step(spec: SystemSpec, schedule: PulseSchedule) -> float:
    """Largest admissible dt: 1 / (20 * fastest angular frequency)."""
    omega = max(spec.max_angular_frequency(), peak_drive_frequency(spec, schedule))
    return math.inf if omega == 0 else 1.0 / (DT_SAFETY * omega)


def _segments(schedule: PulseSchedule) -> List[Tuple[float, float, bool]]:
    """Breakpoint intervals of the schedule, flagged when a pulse is active."""
    total = schedule.total_duration_s
    points = {0.0, total}
    pulses = [p for _, p in schedule.gaussian_pulses()]
    for p in pulses:
        points.update(min(max(x, 0.0), total) for x in (p.start_s, p.end_s))
    points.update(t for t, _ in schedule.rotations())
    ordered = sorted(points)
    segments = []
    for a, b in zip(ordered[:-1], ordered[1:]):
        if b - a <= 1e-18:
            continue
        driven = any(p.start_s < b and p.end_s > a for p in pulses)
        segments.append((a, b, driven))
    return segments


class _Sampler:
    """Checks invariants at sampling points and keeps strictly increasing times."""

    def __init__(self, delay_s: Optional[float]):
        self.delay_s = delay_s
        self.times: List[float] = []
        self.states: List[np.ndarray] = []

    def check(self, rho: np.ndarray, t: float) -> np.ndarray:
        asym = np.max(np.abs(rho - dagger(rho)))
        if asym > ABORT_TOL:
            logger.error(f"Hermiticity lost at t={t:.6g} s (deviation {asym:.2e})")
            raise NumericalError(f"state lost hermiticity at t={t:.6g} s", self.delay_s)
        rho = symmetrize(rho)
        trace = float(np.real(np.trace(rho)))
        if abs(trace - 1.0) > ABORT_TOL:
            raise NumericalError(f"trace drifted to {trace:.9f} at t={t:.6g} s", self.delay_s)
        if abs(trace - 1.0) > TRACE_DRIFT_TOL:
            logger.debug(f"Renormalising trace {trace:.12f} at t={t:.6g} s")
            rho = rho / trace
        min_eig = float(np.min(np.linalg.eigvalsh(rho)))
        if min_eig < -ABORT_TOL:
            logger.error(f"Negative eigenvalue {min_eig:.3e} at t={t:.6g} s")
            raise NumericalError(f"positivity violated ({min_eig:.3e}) at t={t:.6g} s", self.delay_s)
        return rho

    def record(self, rho: np.ndarray, t: float) -> np.ndarray:
        rho = self.check(rho, t)
        if self.times and t <= self.times[-1]:
            self.states[-1] = rho.copy()
        else:
            self.times.append(t)
            self.states.append(rho.copy())
        return rho


def evolve(rho0: np.ndarray, schedule: PulseSchedule, spec: SystemSpec,
           cfg: Optional[IntegratorConfig] = None, delay_s: Optional[float] = None) -> EvolutionResult:
    """
    Integrate the master equation from ``rho0`` over the whole schedule.

    Args:
        rho0: Initial density matrix of the full register
        schedule: Pulses, rotations and idles to apply
        spec: System parameters (noise, couplings, drive calibration)
        cfg: Integrator settings
        delay_s: Delay label attached to numerical-failure diagnostics

    Returns:
        EvolutionResult sampled every ``sample_stride`` steps plus both endpoints
    """
    cfg = cfg or IntegratorConfig()
    rho = np.array(rho0, dtype=complex)
    if num_qubits(rho) != spec.n_qubits:
        raise DimensionError(f"Initial state has {num_qubits(rho)} qubits, spec has {spec.n_qubits}")
    if schedule.n_qubits > spec.n_qubits:
        raise DimensionError("Schedule addresses more qubits than the system has")

    bound = max_step(spec, schedule)
    if cfg.dt_s > bound * (1.0 + 1e-9):
        raise ConfigError("integrator.dt_ns", f"dt={cfg.dt_s:.3e} s exceeds the stability bound {bound:.3e} s")

    static = static_hamiltonian(spec)
    jumps = _prepared_jumps(spec)
    n = spec.n_qubits
    d = 2 ** n
    rotations = schedule.rotations()
    applied = 0
    generator = None

    def apply_rotations_until(t: float, rho: np.ndarray) -> np.ndarray:
        nonlocal applied
        while applied < len(rotations) and rotations[applied][0] <= t + 1e-18:
            _, rot = rotations[applied]
            u = embed(rotation_unitary(rot.theta, rot.phi), rot.target, n)
            rho = u @ rho @ dagger(u)
            applied += 1
        return rho

    sampler = _Sampler(delay_s)
    rho = sampler.record(rho, 0.0)
    steps = 0
    for a, b, driven in _segments(schedule):
        rho = apply_rotations_until(a, rho)
        if driven or cfg.method == "rk4":
            count = max(1, math.ceil((b - a) / cfg.dt_s - 1e-9))
            h_step = (b - a) / count
            for k in range(count):
                t = a + k * h_step
                rho = rk4_step(rho, t, h_step, spec, schedule, static, jumps)
                steps += 1
                if steps % cfg.sample_stride == 0:
                    rho = sampler.record(rho, t + h_step)
        else:
            if generator is None:
                generator = liouvillian(static, spec)
            propagator = expm(generator * (b - a))
            rho = (propagator @ rho.reshape(-1)).reshape(d, d)
            rho = sampler.record(rho, b)
    rho = apply_rotations_until(schedule.total_duration_s, rho)
    sampler.record(rho, schedule.total_duration_s)

    logger.debug(f"Evolved {steps} RK4 steps over {schedule.total_duration_s:.4g} s ({cfg.method})")
    return EvolutionResult(times=np.array(sampler.times), states=sampler.states)


def ground_state(n_qubits: int) -> np.ndarray:
    rho = np.zeros((2 ** n_qubits, 2 ** n_qubits), dtype=complex)
    rho[0, 0] = 1.0
    return rho
