"""
Entanglement and coherence diagnostics for two-qubit state series.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from services.exceptions import FitError
from services.fitting import (DAMPED_SINUSOID, EXPONENTIAL, FitResult, SweepData, decay_time, fit_model,
                              normalise_oscillation)
from services.qcore import (PAULI_ORDER, PauliLabel, eig_hermitian, expectation, num_qubits, partial_trace,
                            partial_transpose, pauli_string, purity)

logger = logging.getLogger(__name__)

CLASSICAL_BOUND = 2.0
TSIRELSON_BOUND = 2.0 * math.sqrt(2.0)
AXES = (PauliLabel.X, PauliLabel.Y, PauliLabel.Z)
NOISE_FLOOR_SIGMAS = 3.0
COHERENCE_WINDOW_FACTOR = 10.0
MIN_COHERENCE_POINTS = 8
BIC_MARGIN = 10.0


# --- purity ------------------------------------------------------------------

@dataclass
class PuritySeries:
    times: np.ndarray
    p0: np.ndarray
    p1: np.ndarray
    p01: np.ndarray

    def __post_init__(self):
        lengths = {len(self.times), len(self.p0), len(self.p1), len(self.p01)}
        if len(lengths) != 1:
            raise ValueError("Purity series must all have the same length")

    @property
    def p0p1(self) -> np.ndarray:
        return self.p0 * self.p1

    @property
    def deviation(self) -> np.ndarray:
        """P01 - P0 P1; non-zero when the two qubits are correlated."""
        return self.p01 - self.p0p1

    def __len__(self) -> int:
        return len(self.times)


def _as_states(states) -> Tuple[np.ndarray, List[np.ndarray]]:
    if hasattr(states, "times") and hasattr(states, "states"):
        return np.asarray(states.times, dtype=float), list(states.states)
    items = list(states)
    if items and hasattr(items[0], "rho_phys"):
        return np.array([r.delay_s for r in items], dtype=float), [r.rho_phys for r in items]
    return np.arange(len(items), dtype=float), items


def purity_suite(states, times: Optional[Sequence[float]] = None) -> PuritySeries:
    """
    P0, P1, P01 (and P0 P1) along a series of two-qubit states.

    Args:
        states: EvolutionResult, TomographyResult list, or plain list of matrices
        times: Overrides the time axis taken from ``states``
    """
    t, rhos = _as_states(states)
    if times is not None:
        t = np.asarray(times, dtype=float)
    p0, p1, p01 = [], [], []
    for rho in rhos:
        if num_qubits(rho) != 2:
            raise ValueError("purity_suite needs two-qubit states")
        p01.append(purity(rho))
        p0.append(purity(partial_trace(rho, 0)))
        p1.append(purity(partial_trace(rho, 1)))
    return PuritySeries(t, np.array(p0), np.array(p1), np.array(p01))


# --- PPT -----------------------------------------------------------------------

def ppt_spectrum(rho: np.ndarray, subsystem: int = 1) -> np.ndarray:
    """Eigenvalues of the partial transpose, descending."""
    values, _ = eig_hermitian(partial_transpose(rho, subsystem))
    return values


def ppt_min_eigenvalue(rho: np.ndarray, subsystem: int = 1) -> float:
    """Smallest eigenvalue of the partial transpose; negative means entangled."""
    return float(ppt_spectrum(rho, subsystem)[-1])


def ppt_noise_floor(rho: np.ndarray, shots: int, sigmas: float = NOISE_FLOOR_SIGMAS) -> float:
    """
    Shot-noise uncertainty of ``ppt_min_eigenvalue`` times ``sigmas``.

    First-order perturbation of the lowest eigenvalue, with binomial variances
    (1 - c^2)/N for correlators and (1 - c^2)/(3N) for averaged marginals.
    """
    if shots <= 0:
        raise ValueError("shots must be positive")
    _, vectors = eig_hermitian(partial_transpose(rho, 1))
    v = vectors[:, -1]
    variance = 0.0
    for a in PAULI_ORDER:
        for b in PAULI_ORDER:
            if a == PauliLabel.I and b == PauliLabel.I:
                continue
            op = pauli_string((a, b))
            c = expectation(rho, op)
            n_eff = shots if PauliLabel.I not in (a, b) else 3 * shots
            var_c = max(1.0 - c * c, 0.0) / n_eff
            weight = 0.25 * float(np.real(v.conj() @ partial_transpose(op, 1) @ v))
            variance += var_c * weight ** 2
    return sigmas * math.sqrt(variance)


# --- CHSH ----------------------------------------------------------------------

def chsh_combos() -> List[Tuple[PauliLabel, PauliLabel, PauliLabel, PauliLabel]]:
    """The 36 (A, A', B, B') with A != A', B != B', lexicographic with X < Y < Z."""
    pairs = [(a, a2) for a, a2 in itertools.product(AXES, AXES) if a != a2]
    return [(a, a2, b, b2) for (a, a2), (b, b2) in itertools.product(pairs, pairs)]


def combo_label(combo) -> str:
    return "".join(axis.value for axis in combo)


@dataclass
class ChshScan:
    combos: List[str]
    s_values: np.ndarray
    max_abs_s: float
    argmax_combo: str
    argmax_index: int

    @property
    def violates(self) -> bool:
        return self.max_abs_s > CLASSICAL_BOUND

    def as_dict(self) -> Dict[str, float]:
        return dict(zip(self.combos, (float(s) for s in self.s_values)))


def correlation_matrix(rho: np.ndarray) -> np.ndarray:
    """T[a, b] = <sigma_a (x) sigma_b> for a, b in X, Y, Z."""
    if num_qubits(rho) != 2:
        raise ValueError("CHSH analysis needs a two-qubit state")
    return np.array([[expectation(rho, pauli_string((a, b))) for b in AXES] for a in AXES])


def chsh_scan_from_correlations(correlations: Union[np.ndarray, Mapping[str, float]]) -> ChshScan:
    """
    CHSH values S = E(A,B) - E(A,B') + E(A',B) + E(A',B') for all 36 combos.

    Args:
        correlations: 3x3 matrix over X, Y, Z or a mapping such as {"XY": 0.7, ...}
    """
    if isinstance(correlations, Mapping):
        t = np.array([[float(correlations[a.value + b.value]) for b in AXES] for a in AXES])
    else:
        t = np.asarray(correlations, dtype=float)
    if t.shape != (3, 3):
        raise ValueError("Correlations must form a 3x3 grid")
    idx = {axis: i for i, axis in enumerate(AXES)}

    def e(a, b):
        return t[idx[a], idx[b]]

    combos = chsh_combos()
    s = np.array([e(a, b) - e(a, b2) + e(a2, b) + e(a2, b2) for a, a2, b, b2 in combos])
    k = int(np.argmax(np.abs(s)))
    return ChshScan(
        combos=[combo_label(c) for c in combos],
        s_values=s,
        max_abs_s=float(abs(s[k])),
        argmax_combo=combo_label(combos[k]),
        argmax_index=k + 1,
    )


def chsh_scan(rho: np.ndarray) -> ChshScan:
    return chsh_scan_from_correlations(correlation_matrix(rho))


# --- coherence -------------------------------------------------------------

@dataclass
class CoherenceFit:
    model: str
    t2_s: float
    oscillation_freq_hz: float
    fit: FitResult
    flags: List[str] = field(default_factory=list)

    @property
    def non_decaying(self) -> bool:
        return "non_decaying" in self.flags

    def to_dict(self) -> Dict:
        return {
            "model": self.model,
            "t2_us": self.t2_s * 1e6,
            "oscillation_freq_hz": self.oscillation_freq_hz,
            "flags": list(self.flags),
            "fit": self.fit.to_dict(),
        }


COHERENCE_MODELS = ("exponential", "exp_cos", "auto")


def _fit_exponential(data: SweepData) -> FitResult:
    return fit_model(EXPONENTIAL, data)


def _fit_exp_cos(data: SweepData) -> FitResult:
    return normalise_oscillation(fit_model(DAMPED_SINUSOID, data), frequency_key="frequency")


def _coherence(model: str, fit: FitResult, data: SweepData) -> CoherenceFit:
    bound = COHERENCE_WINDOW_FACTOR * data.span
    rate = fit.params["decay_rate"]
    t2 = decay_time(rate)
    flags = list(fit.flags)
    if "degenerate" in flags or not t2 < bound:
        flags.append("non_decaying")
        t2 = bound
    freq = fit.params.get("frequency", 0.0)
    return CoherenceFit(model=model, t2_s=t2, oscillation_freq_hz=freq, fit=fit, flags=flags)


def fit_coherence_decay(times: Sequence[float], signal: Sequence[float], model: str = "auto") -> CoherenceFit:
    """
    T2 from a coherence trace.

    Args:
        times: Free-evolution times in seconds
        signal: Measured signal (any affine scale)
        model: 'exponential', 'exp_cos' or 'auto' (lower BIC, oscillation required)

    Raises:
        ValueError: fewer than 8 points or an unknown model
        FitError: the requested model does not converge
    """
    if model not in COHERENCE_MODELS:
        raise ValueError(f"Unknown coherence model {model!r}; expected one of {COHERENCE_MODELS}")
    data = SweepData(times, signal)
    if len(data) < MIN_COHERENCE_POINTS:
        raise ValueError(f"Coherence fits need at least {MIN_COHERENCE_POINTS} points, got {len(data)}")

    if model == "exponential":
        return _coherence("exponential", _fit_exponential(data), data)
    if model == "exp_cos":
        return _coherence("exp_cos", _fit_exp_cos(data), data)

    exp_fit = _fit_exponential(data)
    try:
        osc_fit = _fit_exp_cos(data)
    except FitError as e:
        logger.warning(f"Oscillating coherence model failed, keeping exponential: {e}")
        return _coherence("exponential", exp_fit, data)
    oscillates = osc_fit.params["frequency"] * data.span >= 0.5
    if oscillates and osc_fit.bic < exp_fit.bic - BIC_MARGIN:
        logger.debug(f"Coherence model exp_cos chosen (BIC {osc_fit.bic:.1f} vs {exp_fit.bic:.1f})")
        return _coherence("exp_cos", osc_fit, data)
    return _coherence("exponential", exp_fit, data)


# --- per-delay summary ---------------------------------------------------------

DIAGNOSTICS_COLUMNS = ["delay_s", "P0", "P1", "P01", "P0P1", "ppt_min", "chsh_max", "chsh_argmax"]


@dataclass
class DiagnosticsRow:
    delay_s: float
    p0: float
    p1: float
    p01: float
    ppt_min: float
    chsh_max: float
    chsh_argmax: str
    noise_floor: float = 0.0

    @property
    def p0p1(self) -> float:
        return self.p0 * self.p1

    @property
    def entangled(self) -> bool:
        """PPT minimum below minus the significance threshold."""
        return self.ppt_min < -self.noise_floor

    def to_record(self) -> Dict:
        return {
            "delay_s": self.delay_s,
            "P0": self.p0,
            "P1": self.p1,
            "P01": self.p01,
            "P0P1": self.p0p1,
            "ppt_min": self.ppt_min,
            "chsh_max": self.chsh_max,
            "chsh_argmax": self.chsh_argmax,
        }

    def summary(self) -> Dict:
        record = self.to_record()
        record.update({"noise_floor": self.noise_floor, "entangled": self.entangled,
                       "violates_chsh": self.chsh_max > CLASSICAL_BOUND})
        return record


def diagnose(rho: np.ndarray, delay_s: float = 0.0, shots: Optional[int] = None) -> DiagnosticsRow:
    """All per-state diagnostics; ``shots`` sets the PPT significance threshold."""
    if num_qubits(rho) != 2:
        raise ValueError("diagnose needs a two-qubit state")
    scan = chsh_scan(rho)
    return DiagnosticsRow(
        delay_s=float(delay_s),
        p0=purity(partial_trace(rho, 0)),
        p1=purity(partial_trace(rho, 1)),
        p01=purity(rho),
        ppt_min=ppt_min_eigenvalue(rho),
        chsh_max=scan.max_abs_s,
        chsh_argmax=scan.argmax_combo,
        noise_floor=ppt_noise_floor(rho, shots) if shots else 0.0,
    )


def diagnose_series(states: Iterable[np.ndarray], delays: Sequence[float],
                    shots: Optional[int] = None) -> List[DiagnosticsRow]:
    return [diagnose(rho, d, shots) for rho, d in zip(states, delays)]
