"""
Simulated calibration sweeps and the fitters that read them.

The pipeline runs per qubit:
    1. frequency sweep   -> Lorentzian centre, drive frequency moved onto it
    2. Rabi sweep        -> cosine period, pi amplitude = period / 2
    3. discriminator     -> IQ clouds for |0> and a calibrated pi pulse
    4. Ramsey refinement -> damped sinusoid at (artificial + residual) detuning
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import expm

from services.dynamics import IntegratorConfig, evolve, ground_state, liouvillian, max_step
from services.exceptions import CalibrationError, FitError
from services.fitting import (COSINE, DAMPED_SINUSOID, LORENTZIAN, FitResult, SweepData, decay_time,
                              fit_model, normalise_oscillation)
from services.hamiltonian import TWO_PI, SystemSpec
from services.measurement import Discriminator, IQModel, simulate_iq, train_discriminator
from services.pulses import (DEFAULT_SIGMA_S, GaussianPulse, SequenceKind, SequenceName, build_sequence,
                             single_pulse_schedule)
from services.qcore import SIGMA_X, SIGMA_Z

logger = logging.getLogger(__name__)

FLAT_SIGNAL = 1e-6


@dataclass(frozen=True)
class CalibrationConfig:
    spectroscopy_span_hz: float = 20e6
    spectroscopy_points: int = 201
    spectroscopy_rabi_hz: float = 1e6
    spectroscopy_duration_s: float = 20e-6
    rabi_max_amplitude: float = 0.4
    rabi_points: int = 41
    ramsey_artificial_detuning_hz: float = 2e6
    ramsey_max_delay_s: float = 2e-6
    ramsey_points: int = 61
    sigma_s: float = DEFAULT_SIGMA_S
    iq_model: IQModel = IQModel()
    iq_shots: int = 2000
    noise_level: float = 0.0
    seed: int = 1234
    dt_s: float = 0.2e-9
    qubits: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        for name in ("spectroscopy_points", "rabi_points", "ramsey_points", "iq_shots"):
            if getattr(self, name) < 8:
                raise ValueError(f"calibration.{name} must be at least 8")
        if self.noise_level < 0:
            raise ValueError("calibration.noise_level must be non-negative")
        if self.spectroscopy_duration_s <= 0:
            raise ValueError("calibration.spectroscopy_duration_s must be positive")


@dataclass
class QubitCalibration:
    qubit: int
    frequency_before_hz: float
    frequency_hz: float
    pi_amplitude: float
    residual_detuning_hz: float
    detuning_before_hz: float
    detuning_after_hz: float
    assignment_fidelity: float
    discriminator: Discriminator
    fits: Dict[str, FitResult] = field(default_factory=dict)
    sweeps: Dict[str, SweepData] = field(default_factory=dict)

    @property
    def detuning_correction_hz(self) -> float:
        """Total shift applied to the drive frequency."""
        return self.frequency_hz - self.frequency_before_hz

    def to_dict(self) -> Dict:
        return {
            "qubit": self.qubit,
            "frequency_before_hz": self.frequency_before_hz,
            "frequency_hz": self.frequency_hz,
            "detuning_correction_hz": self.detuning_correction_hz,
            "pi_amplitude_au": self.pi_amplitude,
            "residual_detuning_hz": self.residual_detuning_hz,
            "detuning_before_hz": self.detuning_before_hz,
            "detuning_after_hz": self.detuning_after_hz,
            "assignment_fidelity": self.assignment_fidelity,
            "discriminator": {"normal": list(self.discriminator.normal), "offset": self.discriminator.offset},
            "fits": {name: fit.to_dict() for name, fit in self.fits.items()},
        }


@dataclass
class CalibrationReport:
    spec_before: SystemSpec
    spec: SystemSpec
    qubits: List[QubitCalibration]

    def to_dict(self) -> Dict:
        return {
            "schema": "calibration-v1",
            "qubits": [q.to_dict() for q in self.qubits],
            "rabi_rate_rad_per_us_per_au": self.spec.rabi_rate_per_amp * 1e-6,
        }


def fit_lorentzian(data: SweepData, init=None) -> FitResult:
    """Centre, FWHM, amplitude and baseline of a resonance line."""
    result = fit_model(LORENTZIAN, data, init)
    result.params["width"] = abs(result.params["width"])
    center = result.params["center"]
    if "degenerate" not in result.flags and not data.x[0] <= center <= data.x[-1]:
        raise FitError(f"Lorentzian centre {center:.6g} outside the swept range")
    return result


def fit_cosine(data: SweepData, init=None) -> FitResult:
    """
    Cosine fit of a Rabi amplitude sweep.

    The pi amplitude is reported in ``derived['pi_amplitude']`` as half the period.
    """
    result = fit_model(COSINE, data, init)
    p = result.params
    if p["period"] < 0:
        p["period"] = -p["period"]
        p["phase"] = -p["phase"]
    normalise_oscillation(result)
    result.derived["pi_amplitude"] = 0.5 * p["period"]
    return result


def fit_damped_sinusoid(data: SweepData, init=None) -> FitResult:
    result = fit_model(DAMPED_SINUSOID, data, init)
    normalise_oscillation(result, frequency_key="frequency")
    if result.params["frequency"] * data.span < 0.25:
        result.flags.append("on_resonance")
    if result.params["decay_rate"] < 0:
        result.flags.append("growing")
    result.derived["decay_time"] = decay_time(result.params["decay_rate"])
    return result


def spectroscopy_response(detuning, rabi: float, spec1: SystemSpec, duration_s: float) -> np.ndarray:
    """
    Excited population of one qubit under a constant spectroscopy tone, averaged
    over the drive window and starting from |0>.

    Each point integrates the driven master equation in the frame of the tone,
    H = (D/2) Z + (W/2) X with the qubit's collapse operators. The window average
    of exp(L t) rho0 is the corner block of one exponential of the augmented
    generator [[L T, vec(rho0)], [0, 0]].

    Args:
        detuning: Qubit minus tone frequency in rad/s (scalar or array)
        rabi: Tone Rabi rate in rad/s
        spec1: Single-qubit system supplying the noise channels
        duration_s: Drive window T
    """
    if spec1.n_qubits != 1:
        raise ValueError("spectroscopy_response expects a single-qubit system")
    rho0 = ground_state(1).reshape(-1)
    d = rho0.size
    excited = []
    for delta in np.atleast_1d(np.asarray(detuning, dtype=float)):
        h = 0.5 * delta * SIGMA_Z + 0.5 * rabi * SIGMA_X
        gen = np.zeros((d + 1, d + 1), dtype=complex)
        gen[:d, :d] = liouvillian(h, spec1) * duration_s
        gen[:d, d] = rho0
        averaged = expm(gen)[:d, d]
        # row-major vec: index 3 is rho[1, 1]
        excited.append(averaged[3].real)
    return np.clip(np.array(excited), 0.0, 1.0)


def _add_noise(y: np.ndarray, cfg: CalibrationConfig, rng: np.random.Generator) -> np.ndarray:
    if cfg.noise_level <= 0:
        return y
    scale = cfg.noise_level * max(float(np.ptp(y)), 1e-12)
    return y + rng.normal(0.0, scale, size=y.shape)


def frequency_sweep(spec: SystemSpec, qubit: int, cfg: CalibrationConfig,
                    rng: np.random.Generator) -> SweepData:
    """Spectroscopy line around the current drive frequency of ``qubit``."""
    drive = spec.drive_frequencies_hz[qubit]
    f_qubit = drive + spec.detunings[qubit] / TWO_PI
    x = drive + np.linspace(-0.5, 0.5, cfg.spectroscopy_points) * cfg.spectroscopy_span_hz
    y = spectroscopy_response(TWO_PI * (f_qubit - x), TWO_PI * cfg.spectroscopy_rabi_hz, spec.qubit(qubit),
                              cfg.spectroscopy_duration_s)
    return SweepData(x, _add_noise(y, cfg, rng))


def _integrator(cfg: CalibrationConfig, spec: SystemSpec, schedule) -> IntegratorConfig:
    return IntegratorConfig(dt_s=min(cfg.dt_s, max_step(spec, schedule)), sample_stride=10 ** 9)


def excited_population(spec1: SystemSpec, schedule, cfg: CalibrationConfig) -> float:
    result = evolve(ground_state(1), schedule, spec1, _integrator(cfg, spec1, schedule))
    return float(np.clip(np.real(result.final_state[1, 1]), 0.0, 1.0))


def rabi_sweep(spec1: SystemSpec, cfg: CalibrationConfig, rng: np.random.Generator) -> SweepData:
    """Excited population after one Gaussian pulse, swept in amplitude."""
    template = GaussianPulse(amplitude=0.0, center_s=0.0, sigma_s=cfg.sigma_s)
    amplitudes = np.linspace(0.0, cfg.rabi_max_amplitude, cfg.rabi_points)
    y = np.array([excited_population(spec1, single_pulse_schedule(a, template), cfg) for a in amplitudes])
    return SweepData(amplitudes, _add_noise(y, cfg, rng))


def ramsey_delays(cfg: CalibrationConfig) -> np.ndarray:
    return np.linspace(0.0, cfg.ramsey_max_delay_s, cfg.ramsey_points)


def ramsey_sweep(spec1: SystemSpec, pi_amplitude: float, cfg: CalibrationConfig,
                 rng: np.random.Generator, delays: Optional[np.ndarray] = None) -> SweepData:
    """Ramsey fringe P1(tau) of a single qubit at its configured detuning."""
    template = GaussianPulse(amplitude=pi_amplitude, center_s=0.0, sigma_s=cfg.sigma_s)
    delays = ramsey_delays(cfg) if delays is None else np.asarray(delays, dtype=float)
    y = np.array([
        excited_population(spec1, build_sequence(SequenceKind(SequenceName.RAMSEY, float(tau)), template), cfg)
        for tau in delays
    ])
    return SweepData(delays, _add_noise(y, cfg, rng))


def _fit_step(step: str, fitter, data: SweepData) -> FitResult:
    try:
        return fitter(data)
    except FitError as e:
        logger.error(f"Calibration step '{step}' failed: {e}")
        raise CalibrationError(step, str(e)) from e


def calibrate_qubit(spec: SystemSpec, qubit: int, cfg: CalibrationConfig,
                    seed: np.random.SeedSequence) -> Tuple[SystemSpec, QubitCalibration]:
    """Run the four calibration steps on ``qubit`` and return the updated spec."""
    children = seed.spawn(6)
    rngs = [np.random.default_rng(s) for s in children[:4]]
    detuning_before = spec.detunings[qubit] / TWO_PI
    frequency_before = spec.drive_frequencies_hz[qubit]
    fits, sweeps = {}, {}

    # 1. spectroscopy
    sweeps["frequency"] = frequency_sweep(spec, qubit, cfg, rngs[0])
    fits["frequency"] = _fit_step("frequency", fit_lorentzian, sweeps["frequency"])
    if "degenerate" in fits["frequency"].flags:
        raise CalibrationError("frequency", "no resonance found in the swept window")
    shift = fits["frequency"]["center"] - spec.drive_frequencies_hz[qubit]
    spec = spec.with_qubit(qubit, drive_frequencies_hz=fits["frequency"]["center"],
                           detunings=spec.detunings[qubit] - TWO_PI * shift)
    logger.info(f"Qubit {qubit}: resonance at {fits['frequency']['center']:.6f} Hz")

    # 2. Rabi
    spec1 = spec.qubit(qubit)
    sweeps["rabi"] = rabi_sweep(spec1, cfg, rngs[1])
    if np.ptp(sweeps["rabi"].y) < FLAT_SIGNAL:
        logger.error(f"Qubit {qubit}: Rabi sweep is flat (rabi rate {spec.rabi_rate_per_amp:.3g})")
        raise CalibrationError("rabi", "no Rabi oscillation observed; the drive has no effect")
    fits["rabi"] = _fit_step("rabi", fit_cosine, sweeps["rabi"])
    pi_amplitude = fits["rabi"].derived["pi_amplitude"]
    spec = spec.with_qubit(qubit, pi_amplitudes=pi_amplitude)
    logger.info(f"Qubit {qubit}: pi amplitude {pi_amplitude:.5f} a.u.")

    # 3. discriminator
    template = GaussianPulse(amplitude=pi_amplitude, center_s=0.0, sigma_s=cfg.sigma_s)
    p_excited = excited_population(spec.qubit(qubit), single_pulse_schedule(pi_amplitude, template), cfg)
    ground = simulate_iq(0.0, cfg.iq_model, cfg.iq_shots, children[4])
    excited = simulate_iq(1.0, cfg.iq_model, cfg.iq_shots, children[5])
    disc = train_discriminator(ground.points, excited.points)
    check = simulate_iq(p_excited, replace(cfg.iq_model, discriminator=disc), cfg.iq_shots, rngs[2])
    fidelity = check.assignment_fidelity
    logger.info(f"Qubit {qubit}: assignment fidelity {fidelity:.4f} (pi-pulse population {p_excited:.4f})")

    # 4. Ramsey with an artificial detuning so the residual's sign is visible
    artificial = cfg.ramsey_artificial_detuning_hz
    shifted = spec.qubit(qubit)
    shifted = shifted.with_qubit(0, detunings=shifted.detunings[0] + TWO_PI * artificial)
    sweeps["ramsey"] = ramsey_sweep(shifted, pi_amplitude, cfg, rngs[3])
    fits["ramsey"] = _fit_step("ramsey", fit_damped_sinusoid, sweeps["ramsey"])
    residual = fits["ramsey"]["frequency"] - artificial
    spec = spec.with_qubit(qubit,
                           drive_frequencies_hz=spec.drive_frequencies_hz[qubit] + residual,
                           detunings=spec.detunings[qubit] - TWO_PI * residual)
    logger.info(f"Qubit {qubit}: Ramsey residual detuning {residual:.1f} Hz")

    report = QubitCalibration(
        qubit=qubit,
        frequency_before_hz=frequency_before,
        frequency_hz=spec.drive_frequencies_hz[qubit],
        pi_amplitude=pi_amplitude,
        residual_detuning_hz=residual,
        detuning_before_hz=detuning_before,
        detuning_after_hz=spec.detunings[qubit] / TWO_PI,
        assignment_fidelity=fidelity,
        discriminator=disc,
        fits=fits,
        sweeps=sweeps,
    )
    return spec, report


def calibrate(spec: SystemSpec, cfg: Optional[CalibrationConfig] = None) -> CalibrationReport:
    """
    Calibrate every requested qubit in turn.

    Args:
        spec: System whose detunings are the hidden offsets to find
        cfg: Sweep settings

    Returns:
        CalibrationReport holding both specs and per-qubit fits

    Raises:
        CalibrationError: naming the step that failed
    """
    cfg = cfg or CalibrationConfig()
    if spec.rabi_rate_per_amp <= 0:
        logger.error("Calibration aborted: drive has zero Rabi rate")
        raise CalibrationError("rabi", "Rabi rate is zero; pulses cannot rotate the qubit")
    qubits = cfg.qubits if cfg.qubits is not None else tuple(range(spec.n_qubits))
    seeds = np.random.SeedSequence(cfg.seed).spawn(spec.n_qubits)
    calibrated = spec
    reports = []
    for q in qubits:
        if not 0 <= q < spec.n_qubits:
            raise CalibrationError("setup", f"qubit {q} outside the register")
        logger.info(f"Calibrating qubit {q}")
        calibrated, report = calibrate_qubit(calibrated, q, cfg, seeds[q])
        reports.append(report)
    return CalibrationReport(spec_before=spec, spec=calibrated, qubits=reports)


def run_calibration(spec: SystemSpec, cfg: Optional[CalibrationConfig] = None) -> SystemSpec:
    """Calibrated copy of ``spec`` (frequency, pi amplitude and detuning written back)."""
    return calibrate(spec, cfg).spec
