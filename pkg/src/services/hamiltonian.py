"""
NV level structure and the rotating-frame register Hamiltonian.

Conventions:
    single qubit   (delta_q / 2) sigma_z
    ZZ coupling    (J / 4) sigma_z (x) sigma_z       (sensor shift +-J/2)
    exchange       -A_ex (sigma_x (x) sigma_x + sigma_y (x) sigma_y)
    drive          (Omega(t) / 2)(sigma_x cos phi + sigma_y sin phi)

With this exchange normalisation |+-> evolves into
e^{-iAt} (cos(At)|+-> + i sin(At)|-+>), maximally entangled at t = pi / 4A.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from services.exceptions import ConfigError
from services.pulses import DEFAULT_PI_AMPLITUDE, PulseSchedule, envelope_value, rabi_rate_for_pi_amplitude
from services.qcore import MAX_QUBITS, SIGMA_X, SIGMA_Y, SIGMA_Z, embed

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
ZERO_FIELD_SPLITTING = TWO_PI * 2.87e9
TIME_TOL_S = 1e-15
DEFAULT_RABI_RATE = rabi_rate_for_pi_amplitude(DEFAULT_PI_AMPLITUDE)


@dataclass(frozen=True)
class NvSpinModel:
    d: float = ZERO_FIELD_SPLITTING
    mu_b: float = 0.0

    def __post_init__(self):
        if self.d <= 0:
            raise ValueError("Zero-field splitting D must be positive")


@dataclass(frozen=True)
class CouplingSpec:
    pair: Tuple[int, int]
    zz_strength: float = 0.0
    exchange_strength: float = 0.0

    def __post_init__(self):
        a, b = self.pair
        if a == b:
            raise ValueError("Coupling pair indices must be distinct")
        if not (math.isfinite(self.zz_strength) and math.isfinite(self.exchange_strength)):
            raise ValueError("Coupling strengths must be finite")


@dataclass(frozen=True)
class NoiseSpec:
    t1_s: float = math.inf
    tphi_s: float = math.inf

    def __post_init__(self):
        if not self.t1_s > 0 or not self.tphi_s > 0:
            raise ValueError("T1 and Tphi must be positive or infinite")

    @property
    def gamma1(self) -> float:
        return 0.0 if math.isinf(self.t1_s) else 1.0 / self.t1_s

    @property
    def gamma_phi(self) -> float:
        return 0.0 if math.isinf(self.tphi_s) else 1.0 / self.tphi_s

    @property
    def t2_s(self) -> float:
        rate = 0.5 * self.gamma1 + self.gamma_phi
        return math.inf if rate == 0 else 1.0 / rate

    @classmethod
    def from_t2(cls, t2_s: float, t1_s: float = math.inf) -> "NoiseSpec":
        """Build from T2 using 1/T2 = 1/(2 T1) + 1/Tphi."""
        gamma1 = 0.0 if math.isinf(t1_s) else 1.0 / t1_s
        gamma_phi = (0.0 if math.isinf(t2_s) else 1.0 / t2_s) - 0.5 * gamma1
        if gamma_phi < -1e-15:
            raise ValueError("T2 cannot exceed 2*T1")
        tphi = math.inf if gamma_phi <= 0 else 1.0 / gamma_phi
        return cls(t1_s=t1_s, tphi_s=tphi)


@dataclass(frozen=True)
class SystemSpec:
    n_qubits: int = 2
    detunings: Tuple[float, ...] = (0.0, 0.0)
    couplings: Tuple[CouplingSpec, ...] = ()
    noise: Tuple[NoiseSpec, ...] = (NoiseSpec(), NoiseSpec())
    rabi_rate_per_amp: float = DEFAULT_RABI_RATE
    pi_amplitudes: Tuple[float, ...] = (DEFAULT_PI_AMPLITUDE, DEFAULT_PI_AMPLITUDE)
    drive_frequencies_hz: Tuple[float, ...] = (4.962e9, 4.962e9)

    def __post_init__(self):
        if self.n_qubits not in range(1, MAX_QUBITS + 1):
            raise ConfigError("system.n_qubits", f"must be 1..{MAX_QUBITS}, got {self.n_qubits}")
        for name in ("detunings", "noise", "pi_amplitudes", "drive_frequencies_hz"):
            if len(getattr(self, name)) != self.n_qubits:
                raise ConfigError(f"system.{name}", f"expected {self.n_qubits} entries")
        for c in self.couplings:
            if max(c.pair) >= self.n_qubits or min(c.pair) < 0:
                raise ConfigError("system.couplings", f"pair {c.pair} outside the register")
        if self.rabi_rate_per_amp < 0:
            raise ConfigError("system.rabi_rate_rad_per_us_per_au", "must be non-negative")

    def qubit(self, q: int) -> "SystemSpec":
        """Single-qubit sub-system of qubit ``q`` (couplings dropped)."""
        return SystemSpec(
            n_qubits=1,
            detunings=(self.detunings[q],),
            couplings=(),
            noise=(self.noise[q],),
            rabi_rate_per_amp=self.rabi_rate_per_amp,
            pi_amplitudes=(self.pi_amplitudes[q],),
            drive_frequencies_hz=(self.drive_frequencies_hz[q],),
        )

    def with_qubit(self, q: int, **updates) -> "SystemSpec":
        """Copy with per-qubit tuple fields replaced at index ``q``."""
        changes = {}
        for name, value in updates.items():
            values = list(getattr(self, name))
            values[q] = value
            changes[name] = tuple(values)
        return replace(self, **changes)

    def max_angular_frequency(self) -> float:
        terms = [abs(d) for d in self.detunings]
        for c in self.couplings:
            terms.extend([abs(c.zz_strength), 2.0 * abs(c.exchange_strength)])
        return max(terms) if terms else 0.0


def nv_transition_frequencies(m: NvSpinModel) -> Tuple[float, float]:
    """
    Transition frequencies of H = D Sz^2 + muB Sz relative to |0>.

    Returns:
        (|0> <-> |+1>, |0> <-> |-1>) in rad/s; the effective qubit uses the second
    """
    e = nv_level_energies(m)
    return float(e[0] - e[1]), float(e[2] - e[1])


def nv_level_energies(m: NvSpinModel) -> np.ndarray:
    """Eigenvalues of the spin-1 Hamiltonian ordered as m_s = +1, 0, -1."""
    sz = np.diag([1.0, 0.0, -1.0])
    return np.diag(m.d * sz @ sz + m.mu_b * sz).copy()


def static_hamiltonian(spec: SystemSpec) -> np.ndarray:
    """Detuning and coupling part of H (no drive)."""
    n = spec.n_qubits
    dim = 2 ** n
    h = np.zeros((dim, dim), dtype=complex)
    for q, delta in enumerate(spec.detunings):
        if delta:
            h += 0.5 * delta * embed(SIGMA_Z, q, n)
    for c in spec.couplings:
        a, b = c.pair
        if c.zz_strength:
            h += 0.25 * c.zz_strength * embed(SIGMA_Z, a, n) @ embed(SIGMA_Z, b, n)
        if c.exchange_strength:
            xx = embed(SIGMA_X, a, n) @ embed(SIGMA_X, b, n)
            yy = embed(SIGMA_Y, a, n) @ embed(SIGMA_Y, b, n)
            h -= c.exchange_strength * (xx + yy)
    return h


def drive_hamiltonian(spec: SystemSpec, schedule: PulseSchedule, t: float) -> np.ndarray:
    n = spec.n_qubits
    dim = 2 ** n
    h = np.zeros((dim, dim), dtype=complex)
    for q, p in schedule.active_pulses(t):
        omega = spec.rabi_rate_per_amp * envelope_value(p, t)
        if omega:
            axis = math.cos(p.phase) * SIGMA_X + math.sin(p.phase) * SIGMA_Y
            h += 0.5 * omega * embed(axis, q, n)
    return h


def build_hamiltonian(spec: SystemSpec, schedule: PulseSchedule, t: float,
                      static: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Rotating-frame Hamiltonian H(t) of the register under ``schedule``.

    Args:
        spec: System parameters
        schedule: Pulse schedule acting on the register
        t: Time in seconds, inside [0, total duration]
        static: Precomputed ``static_hamiltonian(spec)``
    """
    if t < -TIME_TOL_S or t > schedule.total_duration_s + TIME_TOL_S:
        raise ValueError(f"t={t:.6g} s outside schedule span [0, {schedule.total_duration_s:.6g}]")
    if schedule.n_qubits > spec.n_qubits:
        raise ValueError("Schedule addresses more qubits than the system has")
    if static is None:
        static = static_hamiltonian(spec)
    return static + drive_hamiltonian(spec, schedule, t)


def peak_drive_frequency(spec: SystemSpec, schedule: PulseSchedule) -> float:
    amps = [p.amplitude for _, p in schedule.gaussian_pulses()]
    return spec.rabi_rate_per_amp * max(amps, default=0.0)


def exchange_coupling(pair: Sequence[int], strength: float) -> CouplingSpec:
    return CouplingSpec(pair=tuple(pair), exchange_strength=strength)


def zz_coupling(pair: Sequence[int], strength: float) -> CouplingSpec:
    return CouplingSpec(pair=tuple(pair), zz_strength=strength)
