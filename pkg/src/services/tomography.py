"""
Nine-setting two-qubit state tomography.

Two-body Pauli coefficients come straight from each setting's correlator; the
six one-body coefficients are marginals averaged over the three settings that
share the relevant axis. The linear-inversion estimate is made physical by
truncating negative eigenvalues and spreading their weight over the rest.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from services.measurement import (CountTable, IQModel, MeasurementSetting, expectation_from_counts,
                                  expected_counts, marginal_expectation, sample_setting)
from services.qcore import (PAULI_ORDER, STATE_TOL, PauliLabel, eig_hermitian, expectation, is_hermitian,
                            num_qubits, partial_trace, pauli_string, symmetrize)

logger = logging.getLogger(__name__)

AXES = (PauliLabel.X, PauliLabel.Y, PauliLabel.Z)
COUNT_COLUMNS = ["delay_s", "setting", "n00", "n01", "n10", "n11", "shots"]
_INDEX = {label: i for i, label in enumerate(PAULI_ORDER)}
_BASIS = {(a, b): pauli_string((a, b)) for a in PAULI_ORDER for b in PAULI_ORDER}


def settings_list() -> List[MeasurementSetting]:
    """X, Y, Z grid, row-major in (basis0, basis1)."""
    return [MeasurementSetting(a, b) for a, b in itertools.product(AXES, AXES)]


SETTING_LABELS = tuple(s.label for s in settings_list())


@dataclass(frozen=True)
class TomographyRecord:
    delay_s: float
    counts: Dict[str, CountTable]

    def __post_init__(self):
        missing = [label for label in SETTING_LABELS if label not in self.counts]
        if missing:
            raise ValueError(f"Tomography record at delay {self.delay_s:.6g} s is missing settings {missing}")
        extra = set(self.counts) - set(SETTING_LABELS)
        if extra:
            raise ValueError(f"Unknown measurement settings {sorted(extra)}")
        for label, c in self.counts.items():
            if c.shots <= 0:
                raise ValueError(f"Setting {label} has zero shots")

    def table(self, setting: Union[str, MeasurementSetting]) -> CountTable:
        label = setting.label if isinstance(setting, MeasurementSetting) else setting
        return self.counts[label]


@dataclass(frozen=True)
class PauliVector:
    """c[i, j] = <sigma_i (x) sigma_j> with i, j ordered I, X, Y, Z."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        if c.shape != (4, 4):
            raise ValueError(f"Pauli vector needs 4x4 coefficients, got {c.shape}")
        if c[0, 0] != 1.0:
            raise ValueError("c_II must equal 1")
        if np.max(np.abs(c)) > 1.0 + 1e-9:
            raise ValueError("Pauli coefficients must lie in [-1, 1]")
        object.__setattr__(self, "coefficients", c)

    def __getitem__(self, key: str) -> float:
        a, b = PauliLabel(key[0]), PauliLabel(key[1])
        return float(self.coefficients[_INDEX[a], _INDEX[b]])

    def as_dict(self) -> Dict[str, float]:
        return {a.value + b.value: float(self.coefficients[_INDEX[a], _INDEX[b]])
                for a in PAULI_ORDER for b in PAULI_ORDER}


@dataclass
class TomographyResult:
    delay_s: float
    pauli: PauliVector
    rho_raw: np.ndarray
    rho_phys: np.ndarray
    min_raw_eigenvalue: float

    def state(self, use_raw: bool = False) -> np.ndarray:
        return self.rho_raw if use_raw else self.rho_phys


def assemble_pauli_vector(rec: TomographyRecord) -> PauliVector:
    """
    Pauli coefficients from the nine count tables.

    Args:
        rec: Complete record of the {X, Y, Z}^2 settings

    Returns:
        PauliVector with one-body terms averaged over compatible settings
    """
    c = np.zeros((4, 4))
    c[0, 0] = 1.0
    for a in AXES:
        for b in AXES:
            c[_INDEX[a], _INDEX[b]] = expectation_from_counts(rec.table(a.value + b.value))
    for axis in AXES:
        c[_INDEX[axis], 0] = np.mean([marginal_expectation(rec.table(axis.value + b.value), 0) for b in AXES])
        c[0, _INDEX[axis]] = np.mean([marginal_expectation(rec.table(a.value + axis.value), 1) for a in AXES])
    return PauliVector(c)


def pauli_vector_from_state(rho: np.ndarray) -> PauliVector:
    """Exact coefficients Tr(rho sigma_i (x) sigma_j)."""
    if num_qubits(rho) != 2:
        raise ValueError("Pauli vectors are defined for two-qubit states")
    c = np.zeros((4, 4))
    for (a, b), op in _BASIS.items():
        c[_INDEX[a], _INDEX[b]] = expectation(rho, op)
    c[0, 0] = 1.0
    return PauliVector(np.clip(c, -1.0, 1.0))


def linear_inversion(v: PauliVector) -> np.ndarray:
    """rho = (1/4) sum_ij c_ij sigma_i (x) sigma_j."""
    rho = np.zeros((4, 4), dtype=complex)
    for (a, b), op in _BASIS.items():
        rho += v.coefficients[_INDEX[a], _INDEX[b]] * op
    return 0.25 * rho


def truncate_eigenvalues(values: Iterable[float]) -> np.ndarray:
    """
    Zero the most negative tail of a unit-sum spectrum, sharing its deficit.

    ``values`` must be sorted in descending order.
    """
    mu = np.array(list(values), dtype=float)
    lam = np.zeros_like(mu)
    i = mu.size
    accumulated = 0.0
    while i > 0 and mu[i - 1] + accumulated / i < 0:
        accumulated += mu[i - 1]
        i -= 1
    if i == 0:
        raise ValueError("Spectrum has no positive weight to redistribute")
    lam[:i] = mu[:i] + accumulated / i
    return lam


def project_psd(rho_raw: np.ndarray, tol: float = STATE_TOL) -> np.ndarray:
    """
    Closest unit-trace PSD matrix in the eigenbasis of ``rho_raw``.

    Raises:
        ValueError: for non-Hermitian input or a trace away from one
    """
    rho_raw = np.asarray(rho_raw, dtype=complex)
    if not is_hermitian(rho_raw, tol):
        raise ValueError("project_psd requires a Hermitian operator")
    trace = float(np.real(np.trace(rho_raw)))
    if abs(trace - 1.0) > tol:
        raise ValueError(f"project_psd requires unit trace, got {trace:.12g}")
    values, vectors = eig_hermitian(rho_raw, tol)
    if values[-1] >= 0:
        return symmetrize(rho_raw)
    lam = truncate_eigenvalues(values)
    rho = (vectors * lam) @ vectors.conj().T
    return symmetrize(rho)


def reduced_states(rho: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return partial_trace(rho, 0), partial_trace(rho, 1)


def reconstruct(rec: TomographyRecord) -> TomographyResult:
    pauli = assemble_pauli_vector(rec)
    rho_raw = linear_inversion(pauli)
    min_eig = float(np.min(np.linalg.eigvalsh(rho_raw)))
    rho_phys = project_psd(rho_raw)
    if min_eig < 0:
        logger.debug(f"Delay {rec.delay_s:.6g} s: raw estimate has eigenvalue {min_eig:.3e}, projected")
    return TomographyResult(rec.delay_s, pauli, rho_raw, rho_phys, min_eig)


def reconstruct_from_state(rho: np.ndarray, delay_s: float = 0.0) -> TomographyResult:
    """Noise-free tomography using exact expectation values."""
    pauli = pauli_vector_from_state(rho)
    rho_raw = linear_inversion(pauli)
    min_eig = float(np.min(np.linalg.eigvalsh(rho_raw)))
    return TomographyResult(delay_s, pauli, rho_raw, project_psd(rho_raw), min_eig)


def expected_record(rho: np.ndarray, shots: int, delay_s: float = 0.0,
                    readout: Optional[IQModel] = None) -> TomographyRecord:
    """Record of rounded exact counts for every setting."""
    return TomographyRecord(delay_s, {s.label: expected_counts(rho, s, shots, readout) for s in settings_list()})


def sample_record(rho: np.ndarray, shots: int, seed: Union[int, np.random.SeedSequence],
                  delay_s: float = 0.0, readout: Optional[IQModel] = None) -> TomographyRecord:
    """Finite-shot record; setting k draws from child k of ``seed``."""
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = seq.spawn(len(SETTING_LABELS))
    counts = {s.label: sample_setting(rho, s, shots, child, readout)
              for s, child in zip(settings_list(), children)}
    return TomographyRecord(delay_s, counts)


def records_to_frame(records: Iterable[TomographyRecord]) -> pd.DataFrame:
    rows = []
    for rec in records:
        for label in SETTING_LABELS:
            c = rec.counts[label]
            rows.append([rec.delay_s, label, c.n00, c.n01, c.n10, c.n11, c.shots])
    return pd.DataFrame(rows, columns=COUNT_COLUMNS)


def records_from_frame(df: pd.DataFrame) -> List[TomographyRecord]:
    """Group a counts table by delay; shots must equal the row sum."""
    missing = [col for col in COUNT_COLUMNS if col not in df.columns]
    if missing:
        raise ValueError(f"Counts table is missing columns {missing}")
    records = []
    for delay, group in df.groupby("delay_s", sort=True):
        counts = {}
        for row in group.itertuples(index=False):
            table = CountTable(int(row.n00), int(row.n01), int(row.n10), int(row.n11))
            if table.shots != int(row.shots):
                raise ValueError(f"Row {row.setting} at delay {delay}: counts sum to {table.shots}, shots={row.shots}")
            label = str(row.setting).strip().upper()
            if label in counts:
                raise ValueError(f"Duplicate setting {label} at delay {delay}")
            counts[label] = table
        records.append(TomographyRecord(float(delay), counts))
    return records


def records_from_csv(path) -> List[TomographyRecord]:
    df = pd.read_csv(path, dtype={"setting": str})
    logger.info(f"Loaded {len(df)} count rows from {path}")
    return records_from_frame(df)
