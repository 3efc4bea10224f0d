"""
Pauli-setting expectations, finite-shot sampling and the IQ readout model.

Outcome labels are ordered 00, 01, 10, 11 with qubit 0 as the left bit.
Measuring X uses the pre-rotation U(pi/2, -pi/2) and measuring Y uses
U(pi/2, 0) before a Z readout.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple, Union

import numpy as np
from scipy.special import erfc
from sklearn.neighbors import NearestCentroid

from services.pulses import rotation_unitary
from services.qcore import PauliLabel, dagger, num_qubits, pauli_string

logger = logging.getLogger(__name__)

OUTCOMES = ("00", "01", "10", "11")
SeedLike = Union[int, np.random.SeedSequence]

_PRE_ROTATIONS = {
    PauliLabel.X: rotation_unitary(math.pi / 2.0, -math.pi / 2.0),
    PauliLabel.Y: rotation_unitary(math.pi / 2.0, 0.0),
    PauliLabel.Z: np.eye(2, dtype=complex),
}


@dataclass(frozen=True)
class MeasurementSetting:
    basis0: PauliLabel
    basis1: PauliLabel

    def __post_init__(self):
        object.__setattr__(self, "basis0", PauliLabel(self.basis0))
        object.__setattr__(self, "basis1", PauliLabel(self.basis1))
        if PauliLabel.I in (self.basis0, self.basis1):
            raise ValueError("Measurement settings cannot use the identity axis")

    @property
    def label(self) -> str:
        return f"{self.basis0.value}{self.basis1.value}"

    @classmethod
    def from_label(cls, label: str) -> "MeasurementSetting":
        label = label.strip().upper()
        if len(label) != 2:
            raise ValueError(f"Invalid setting label: {label!r}")
        return cls(PauliLabel(label[0]), PauliLabel(label[1]))

    def observable(self) -> np.ndarray:
        return pauli_string((self.basis0, self.basis1))


@dataclass(frozen=True)
class CountTable:
    n00: int
    n01: int
    n10: int
    n11: int

    def __post_init__(self):
        if min(self.as_tuple()) < 0:
            raise ValueError("Counts must be non-negative")

    @property
    def shots(self) -> int:
        return self.n00 + self.n01 + self.n10 + self.n11

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return (self.n00, self.n01, self.n10, self.n11)

    @classmethod
    def from_sequence(cls, counts) -> "CountTable":
        values = [int(c) for c in counts]
        if len(values) != 4:
            raise ValueError("A count table needs exactly four outcomes")
        return cls(*values)


@dataclass(frozen=True)
class Discriminator:
    normal: Tuple[float, float]
    offset: float

    def __post_init__(self):
        norm = math.hypot(*self.normal)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"Discriminator normal must be a unit vector (norm {norm})")

    def assign(self, points: np.ndarray) -> np.ndarray:
        """Label 1 on the side the normal points to."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return (points @ np.asarray(self.normal) - self.offset > 0).astype(int)


@dataclass(frozen=True)
class IQModel:
    center0: Tuple[float, float] = (-1.0, 0.0)
    center1: Tuple[float, float] = (1.0, 0.0)
    cloud_sigma: float = 1.0 / 3.0
    discriminator: Optional[Discriminator] = None

    def __post_init__(self):
        if not self.cloud_sigma > 0:
            raise ValueError("IQ cloud sigma must be positive")

    @property
    def separation(self) -> float:
        return float(np.hypot(*(np.asarray(self.center1) - np.asarray(self.center0))))

    def active_discriminator(self) -> Discriminator:
        if self.discriminator is not None:
            return self.discriminator
        return midpoint_discriminator(self.center0, self.center1)

    def assignment_error(self) -> float:
        """Analytic misassignment probability 0.5 erfc(d / (2 sqrt(2) sigma))."""
        return float(0.5 * erfc(self.separation / (2.0 * math.sqrt(2.0) * self.cloud_sigma)))

    def confusion_matrix(self) -> np.ndarray:
        """P(assigned | prepared) for one qubit, columns indexed by prepared state."""
        eps = self.assignment_error()
        return np.array([[1.0 - eps, eps], [eps, 1.0 - eps]])


@dataclass
class IQShots:
    points: np.ndarray
    true_labels: np.ndarray
    assigned: np.ndarray = field(default=None)

    @property
    def assignment_fidelity(self) -> float:
        return float(np.mean(self.true_labels == self.assigned))

    @property
    def assignment_error(self) -> float:
        return 1.0 - self.assignment_fidelity


def midpoint_discriminator(center0, center1) -> Discriminator:
    c0 = np.asarray(center0, dtype=float)
    c1 = np.asarray(center1, dtype=float)
    diff = c1 - c0
    norm = np.linalg.norm(diff)
    if norm == 0:
        # coincident clouds: any line through the common center
        normal = np.array([1.0, 0.0])
    else:
        normal = diff / norm
    offset = float(normal @ (0.5 * (c0 + c1)))
    return Discriminator(normal=(float(normal[0]), float(normal[1])), offset=offset)


def _rng(seed: SeedLike) -> np.random.Generator:
    return np.random.default_rng(seed)


def expectation_exact(rho: np.ndarray, s: MeasurementSetting) -> float:
    """Tr(rho sigma_a (x) sigma_b)."""
    if num_qubits(rho) != 2:
        raise ValueError("expectation_exact needs a two-qubit state")
    return float(np.real(np.trace(np.asarray(rho) @ s.observable())))


def expectation_from_counts(c: CountTable) -> float:
    """(n00 + n11 - n01 - n10) / shots."""
    if c.shots <= 0:
        raise ValueError("Cannot compute an expectation from zero shots")
    return (c.n00 + c.n11 - c.n01 - c.n10) / c.shots


def marginal_expectation(c: CountTable, qubit: int) -> float:
    """Single-qubit <sigma> from a joint count table."""
    if c.shots <= 0:
        raise ValueError("Cannot compute an expectation from zero shots")
    if qubit == 0:
        return (c.n00 + c.n01 - c.n10 - c.n11) / c.shots
    if qubit == 1:
        return (c.n00 - c.n01 + c.n10 - c.n11) / c.shots
    raise ValueError(f"Invalid qubit index {qubit}")


def outcome_probabilities(rho: np.ndarray, s: MeasurementSetting,
                          readout: Optional[IQModel] = None) -> np.ndarray:
    """Probabilities of 00, 01, 10, 11 after the basis pre-rotations."""
    if num_qubits(rho) != 2:
        raise ValueError("Sampling needs a two-qubit state")
    u = np.kron(_PRE_ROTATIONS[s.basis0], _PRE_ROTATIONS[s.basis1])
    rotated = u @ np.asarray(rho, dtype=complex) @ dagger(u)
    probs = np.clip(np.real(np.diag(rotated)), 0.0, None)
    if readout is not None:
        m = readout.confusion_matrix()
        probs = np.kron(m, m) @ probs
    return probs / probs.sum()


def sample_setting(rho: np.ndarray, s: MeasurementSetting, shots: int, seed: SeedLike,
                   readout: Optional[IQModel] = None) -> CountTable:
    """
    Draw ``shots`` outcomes of setting ``s`` with a generator seeded by ``seed``.

    Args:
        rho: Two-qubit state
        s: Measurement setting
        shots: Number of repetitions
        seed: Integer or SeedSequence; same seed gives the same table
        readout: Optional IQ model whose assignment error is applied per qubit
    """
    if shots <= 0:
        raise ValueError("shots must be positive")
    probs = outcome_probabilities(rho, s, readout)
    counts = _rng(seed).multinomial(shots, probs)
    return CountTable(*(int(c) for c in counts))


def expected_counts(rho: np.ndarray, s: MeasurementSetting, shots: int,
                    readout: Optional[IQModel] = None) -> CountTable:
    """Noise-free counts: probabilities * shots with largest-remainder rounding."""
    if shots <= 0:
        raise ValueError("shots must be positive")
    raw = outcome_probabilities(rho, s, readout) * shots
    counts = np.floor(raw).astype(int)
    remainder = shots - counts.sum()
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[:remainder]] += 1
    return CountTable(*(int(c) for c in counts))


def simulate_iq(p_excited: float, model: IQModel, shots: int, seed: SeedLike) -> IQShots:
    """Single-shot IQ points for a qubit with excited population ``p_excited``."""
    if not 0.0 <= p_excited <= 1.0:
        raise ValueError("p_excited must lie in [0, 1]")
    if shots <= 0:
        raise ValueError("shots must be positive")
    rng = _rng(seed)
    labels = (rng.random(shots) < p_excited).astype(int)
    centers = np.where(labels[:, None] == 1, np.asarray(model.center1), np.asarray(model.center0))
    points = centers + rng.normal(0.0, model.cloud_sigma, size=(shots, 2))
    assigned = model.active_discriminator().assign(points)
    return IQShots(points=points, true_labels=labels, assigned=assigned)


def train_discriminator(points0, points1) -> Discriminator:
    """
    Linear rule splitting two IQ clouds at the midpoint of their centroids.

    Args:
        points0: (I, Q) samples of the prepared |0> state
        points1: (I, Q) samples of the prepared |1> state
    """
    p0 = np.atleast_2d(np.asarray(points0, dtype=float))
    p1 = np.atleast_2d(np.asarray(points1, dtype=float))
    if p0.size == 0 or p1.size == 0:
        raise ValueError("Both point clouds must be non-empty")
    classifier = NearestCentroid()
    classifier.fit(np.vstack([p0, p1]), np.concatenate([np.zeros(len(p0)), np.ones(len(p1))]))
    c0, c1 = classifier.centroids_
    if np.allclose(c0, c1, rtol=0.0, atol=1e-15):
        raise ValueError("Cannot train a discriminator on identical centroids")
    disc = midpoint_discriminator(c0, c1)
    logger.debug(f"Trained discriminator normal={disc.normal}, offset={disc.offset:.4g}")
    return disc


def counts_as_dict(c: CountTable) -> Dict[str, int]:
    return dict(zip(OUTCOMES, c.as_tuple()))
