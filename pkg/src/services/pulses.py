"""
Gaussian pulse envelopes, ideal rotations and the named pulse schedules.

The carrier cos(wt + phi) is not integrated: dynamics runs in the rotating
frame of each qubit and ``phase`` only selects the rotation axis (0 -> X,
pi/2 -> Y).
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.special import erf

from services.qcore import SIGMA_X, SIGMA_Y

logger = logging.getLogger(__name__)

DEFAULT_SIGMA_S = 10e-9
DEFAULT_TRUNCATION = 3.0
DEFAULT_PI_AMPLITUDE = 0.095
SCHEDULE_TOL_S = 1e-15


@dataclass(frozen=True)
class GaussianPulse:
    amplitude: float
    center_s: float
    sigma_s: float = DEFAULT_SIGMA_S
    omega: float = 0.0
    phase: float = 0.0
    truncation: float = DEFAULT_TRUNCATION

    def __post_init__(self):
        if self.sigma_s <= 0:
            raise ValueError("Pulse width sigma must be positive")
        if self.truncation <= 0:
            raise ValueError("Pulse truncation must be positive")
        if self.amplitude < 0:
            raise ValueError("Pulse amplitude must be non-negative")

    @property
    def half_width_s(self) -> float:
        return self.truncation * self.sigma_s

    @property
    def start_s(self) -> float:
        return self.center_s - self.half_width_s

    @property
    def end_s(self) -> float:
        return self.center_s + self.half_width_s

    @property
    def duration_s(self) -> float:
        return 2.0 * self.half_width_s

    def unit_area_s(self) -> float:
        """Area of the truncated unit-amplitude envelope."""
        return self.sigma_s * math.sqrt(2.0 * math.pi) * erf(self.truncation / math.sqrt(2.0))


@dataclass(frozen=True)
class IdealRotation:
    theta: float
    phi: float = 0.0
    target: int = 0

    def __post_init__(self):
        if not 0.0 <= self.theta < 2.0 * math.pi:
            raise ValueError("Rotation angle must lie in [0, 2*pi)")

    @property
    def duration_s(self) -> float:
        return 0.0


@dataclass(frozen=True)
class Idle:
    duration_s: float

    def __post_init__(self):
        if self.duration_s < 0:
            raise ValueError("Idle duration must be non-negative")


ScheduleItem = Union[GaussianPulse, IdealRotation, Idle]


@dataclass(frozen=True)
class ScheduledItem:
    qubit: int
    start_s: float
    item: ScheduleItem

    @property
    def end_s(self) -> float:
        return self.start_s + self.item.duration_s

    @property
    def kind(self) -> str:
        if isinstance(self.item, GaussianPulse):
            return "gaussian"
        if isinstance(self.item, IdealRotation):
            return "rotation"
        return "idle"


@dataclass(frozen=True)
class PulseSchedule:
    n_qubits: int
    items: Tuple[ScheduledItem, ...]
    total_duration_s: float

    def items_on(self, qubit: int) -> List[ScheduledItem]:
        return sorted((it for it in self.items if it.qubit == qubit), key=lambda it: it.start_s)

    def gaussian_pulses(self) -> List[Tuple[int, GaussianPulse]]:
        return [(it.qubit, it.item) for it in self.items if isinstance(it.item, GaussianPulse)]

    def active_pulses(self, t: float) -> List[Tuple[int, GaussianPulse]]:
        return [(q, p) for q, p in self.gaussian_pulses() if p.start_s <= t <= p.end_s]

    def rotations(self) -> List[Tuple[float, IdealRotation]]:
        return sorted(
            ((it.start_s, it.item) for it in self.items if isinstance(it.item, IdealRotation)),
            key=lambda pair: pair[0],
        )

    def validate(self) -> None:
        """Check per-qubit non-overlap and that every item fits in the total span."""
        for q in range(self.n_qubits):
            cursor = -math.inf
            busy = 0.0
            for it in self.items_on(q):
                if it.start_s < cursor - SCHEDULE_TOL_S:
                    raise ValueError(f"Overlapping items on qubit {q} at t={it.start_s:.6g} s")
                cursor = it.end_s
                busy += it.item.duration_s
            if busy > self.total_duration_s + SCHEDULE_TOL_S:
                raise ValueError(f"Items on qubit {q} exceed the schedule duration")
            if cursor > self.total_duration_s + SCHEDULE_TOL_S:
                raise ValueError(f"Items on qubit {q} run past the schedule end")

    def to_records(self) -> List[Dict]:
        """JSON-ready list of {qubit, kind, start_s, params}."""
        records = []
        for it in sorted(self.items, key=lambda it: (it.start_s, it.qubit)):
            if isinstance(it.item, GaussianPulse):
                p = it.item
                params = {
                    "amplitude": p.amplitude,
                    "center_s": p.center_s,
                    "sigma_s": p.sigma_s,
                    "omega": p.omega,
                    "phase": p.phase,
                    "truncation": p.truncation,
                }
            elif isinstance(it.item, IdealRotation):
                params = {"theta": it.item.theta, "phi": it.item.phi}
            else:
                params = {"duration_s": it.item.duration_s}
            records.append({"qubit": it.qubit, "kind": it.kind, "start_s": it.start_s, "params": params})
        return records


class SequenceName(str, Enum):
    RAMSEY = "ramsey"
    HAHN_ECHO = "hahn_echo"
    NUCLEAR_IMPURITY = "nuclear_impurity"
    NVNV_IMPURITY = "nvnv_impurity"


@dataclass(frozen=True)
class SequenceKind:
    name: SequenceName
    tau_s: float

    def __post_init__(self):
        object.__setattr__(self, "name", SequenceName(self.name))
        if self.tau_s < 0:
            raise ValueError("Sequence delay tau must be non-negative")

    @property
    def n_qubits(self) -> int:
        return 1 if self.name in (SequenceName.RAMSEY, SequenceName.HAHN_ECHO) else 2

    def free_evolution_time(self) -> float:
        """Total idle time the sensor spends dephasing."""
        if self.name == SequenceName.RAMSEY:
            return self.tau_s
        return 2.0 * self.tau_s


def envelope_value(p: GaussianPulse, t: float) -> float:
    """A exp(-(t - t0)^2 / 2 sigma^2) inside the truncation window, 0 outside."""
    if abs(t - p.center_s) > p.half_width_s:
        return 0.0
    return p.amplitude * math.exp(-((t - p.center_s) ** 2) / (2.0 * p.sigma_s ** 2))


def rotation_unitary(theta: float, phi: float) -> np.ndarray:
    """exp(-i theta/2 (sigma_x cos phi + sigma_y sin phi))."""
    axis = math.cos(phi) * SIGMA_X + math.sin(phi) * SIGMA_Y
    return math.cos(theta / 2.0) * np.eye(2, dtype=complex) - 1j * math.sin(theta / 2.0) * axis


def pulse_theta(p: GaussianPulse, rabi_rate_per_amp: float) -> float:
    """Rotation angle delivered by a pulse: rate * A * truncated area."""
    if rabi_rate_per_amp <= 0:
        raise ValueError("Rabi rate per amplitude must be positive")
    return rabi_rate_per_amp * p.amplitude * p.unit_area_s()


def rabi_rate_for_pi_amplitude(pi_amplitude: float, sigma_s: float = DEFAULT_SIGMA_S,
                               truncation: float = DEFAULT_TRUNCATION) -> float:
    """Rabi rate per amplitude at which ``pi_amplitude`` yields a pi rotation."""
    area = GaussianPulse(amplitude=1.0, center_s=0.0, sigma_s=sigma_s, truncation=truncation).unit_area_s()
    return math.pi / (pi_amplitude * area)


class _Timeline:
    """Append-only per-qubit item list with a running clock."""

    def __init__(self, qubit: int, template: GaussianPulse, start_s: float = 0.0):
        self.qubit = qubit
        self.template = template
        self.clock = start_s
        self.items: List[ScheduledItem] = []

    def pulse(self, fraction: float, phase: float) -> None:
        p = replace(
            self.template,
            amplitude=self.template.amplitude * fraction,
            center_s=self.clock + self.template.half_width_s,
            phase=phase,
        )
        self.items.append(ScheduledItem(self.qubit, self.clock, p))
        self.clock = p.end_s

    def idle(self, duration_s: float) -> None:
        self.items.append(ScheduledItem(self.qubit, self.clock, Idle(duration_s)))
        self.clock += duration_s

    def echo(self, tau_s: float, prep_phase: float) -> None:
        # pi/2 (phi) - tau - pi (phi + pi/2) - tau - pi/2 (phi)
        self.pulse(0.5, prep_phase)
        self.idle(tau_s)
        self.pulse(1.0, prep_phase + math.pi / 2.0)
        self.idle(tau_s)
        self.pulse(0.5, prep_phase)


def build_sequence(kind: SequenceKind, template: Optional[GaussianPulse] = None,
                   impurity_template: Optional[GaussianPulse] = None) -> PulseSchedule:
    """
    Build one of the four named schedules.

    Args:
        kind: Sequence name and delay tau
        template: Pulse whose amplitude is the calibrated pi amplitude of qubit 0;
            pi/2 pulses use half of it
        impurity_template: Same for qubit 1 (defaults to ``template``)

    Returns:
        A validated PulseSchedule
    """
    if not isinstance(kind, SequenceKind):
        raise ValueError(f"Unknown sequence kind: {kind!r}")
    template = template or GaussianPulse(amplitude=DEFAULT_PI_AMPLITUDE, center_s=0.0)
    impurity_template = impurity_template or template
    tau = kind.tau_s

    sensor = _Timeline(0, template)
    timelines = [sensor]

    if kind.name == SequenceName.RAMSEY:
        sensor.pulse(0.5, 0.0)
        sensor.idle(tau)
        sensor.pulse(0.5, 0.0)
    elif kind.name == SequenceName.HAHN_ECHO:
        sensor.echo(tau, 0.0)
    elif kind.name == SequenceName.NUCLEAR_IMPURITY:
        sensor.echo(tau, 0.0)
        impurity = _Timeline(1, impurity_template)
        impurity.pulse(1.0, 0.0)
        timelines.append(impurity)
    elif kind.name == SequenceName.NVNV_IMPURITY:
        sensor.echo(tau, math.pi / 2.0)
        impurity = _Timeline(1, impurity_template)
        impurity.echo(tau, -math.pi / 2.0)
        timelines.append(impurity)
    else:
        raise ValueError(f"Unknown sequence kind: {kind.name}")

    total = max(t.clock for t in timelines)
    for t in timelines:
        if t.clock < total - SCHEDULE_TOL_S:
            t.idle(total - t.clock)

    items = tuple(it for t in timelines for it in t.items)
    schedule = PulseSchedule(n_qubits=kind.n_qubits, items=items, total_duration_s=total)
    schedule.validate()
    logger.debug(f"Built {kind.name.value} schedule: tau={tau:.4g} s, total={total:.4g} s")
    return schedule


def single_pulse_schedule(amplitude: float, template: Optional[GaussianPulse] = None,
                          phase: float = 0.0) -> PulseSchedule:
    """One Gaussian pulse on qubit 0 starting at t=0 (Rabi amplitude sweeps)."""
    template = template or GaussianPulse(amplitude=DEFAULT_PI_AMPLITUDE, center_s=0.0)
    p = replace(template, amplitude=amplitude, center_s=template.half_width_s, phase=phase)
    schedule = PulseSchedule(1, (ScheduledItem(0, 0.0, p),), p.end_s)
    schedule.validate()
    return schedule


def idle_schedule(duration_s: float, n_qubits: int,
                  rotations: Optional[List[Tuple[float, IdealRotation]]] = None) -> PulseSchedule:
    """Free evolution of ``n_qubits`` with optional instantaneous rotations."""
    rotations = sorted(rotations or [], key=lambda pair: pair[0])
    items = []
    for q in range(n_qubits):
        cursor = 0.0
        for t, rot in rotations:
            if rot.target != q:
                continue
            if not 0.0 <= t <= duration_s:
                raise ValueError(f"Rotation at t={t:.6g} s outside the schedule")
            if t > cursor:
                items.append(ScheduledItem(q, cursor, Idle(t - cursor)))
            items.append(ScheduledItem(q, t, rot))
            cursor = t
        if duration_s > cursor:
            items.append(ScheduledItem(q, cursor, Idle(duration_s - cursor)))
    schedule = PulseSchedule(n_qubits, tuple(items), duration_s)
    schedule.validate()
    return schedule
