"""
Experiment orchestration: config ingestion, per-delay runs, sweeps and file output.

Every stochastic draw is keyed by (seed, delay index, setting index) through
``SeedSequence(seed, spawn_key=(index,))`` so results do not depend on the
order in which delays or sweep points are executed.
"""

import copy
import hashlib
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from services.calibration import CalibrationConfig
from services.diagnostics import CoherenceFit, DiagnosticsRow, diagnose, fit_coherence_decay
from services.dynamics import METHODS, IntegratorConfig, evolve, ground_state
from services.exceptions import ConfigError, FitError, NumericalError
from services.export import dumps, export, write_csv, write_json
from services.hamiltonian import TWO_PI, CouplingSpec, NoiseSpec, SystemSpec
from services.measurement import IQModel
from services.presets import DEFAULT_A_EX_KHZ, DEFAULT_J_KHZ, PRESETS, load_preset
from services.pulses import (DEFAULT_PI_AMPLITUDE, DEFAULT_SIGMA_S, DEFAULT_TRUNCATION, GaussianPulse,
                             SequenceKind, SequenceName, build_sequence, rabi_rate_for_pi_amplitude)
from services.qcore import MAX_QUBITS
from services.tomography import TomographyRecord, TomographyResult, reconstruct, reconstruct_from_state, sample_record

logger = logging.getLogger(__name__)

VERSION = "1.0.0"
OUTPUT_FORMATS = ("csv", "json")
SWEEP_PARAMETERS = ("j_khz", "a_ex_khz", "detuning_mhz", "t2_us", "impurity_t1_us")
_SEQUENCE_ALIASES = {
    "ramsey": SequenceName.RAMSEY,
    "hahn_echo": SequenceName.HAHN_ECHO,
    "hahnecho": SequenceName.HAHN_ECHO,
    "nuclear_impurity": SequenceName.NUCLEAR_IMPURITY,
    "nuclearimpurity": SequenceName.NUCLEAR_IMPURITY,
    "nvnv_impurity": SequenceName.NVNV_IMPURITY,
    "nvnvimpurity": SequenceName.NVNV_IMPURITY,
}
_MISSING = object()


# --- field parsing --------------------------------------------------------------

def _get(doc: Dict, key: str, path: str, default: Any = _MISSING) -> Any:
    if not isinstance(doc, dict):
        raise ConfigError(path, "expected an object")
    if key not in doc:
        if default is _MISSING:
            raise ConfigError(f"{path}.{key}" if path else key, "required field is missing")
        return default
    return doc[key]


def _number(value: Any, path: str, minimum: Optional[float] = None, strict: bool = False,
            allow_none: bool = False) -> Optional[float]:
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(path, f"expected a finite number, got {value!r}")
    if minimum is not None and (value < minimum or (strict and value == minimum)):
        relation = ">" if strict else ">="
        raise ConfigError(path, f"must be {relation} {minimum}, got {value}")
    return float(value)


def _integer(value: Any, path: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(path, f"must be >= {minimum}, got {value}")
    return value


def _per_qubit(doc: Dict, key: str, path: str, n: int, default: float) -> List[float]:
    values = _get(doc, key, path, [default] * n)
    if not isinstance(values, list) or len(values) != n:
        raise ConfigError(f"{path}.{key}", f"expected a list of {n} numbers")
    return [_number(v, f"{path}.{key}[{i}]") for i, v in enumerate(values)]


def _us(value: Optional[float]) -> float:
    return math.inf if value is None else value * 1e-6


def _parse_noise(entry: Dict, path: str) -> NoiseSpec:
    t1 = _us(_number(_get(entry, "t1_us", path, None), f"{path}.t1_us", 0.0, strict=True, allow_none=True))
    if "t2_us" in entry and "tphi_us" in entry:
        raise ConfigError(path, "give either t2_us or tphi_us, not both")
    if "t2_us" in entry:
        t2 = _us(_number(entry["t2_us"], f"{path}.t2_us", 0.0, strict=True, allow_none=True))
        try:
            return NoiseSpec.from_t2(t2, t1)
        except ValueError as e:
            raise ConfigError(f"{path}.t2_us", str(e)) from e
    tphi = _us(_number(_get(entry, "tphi_us", path, None), f"{path}.tphi_us", 0.0, strict=True, allow_none=True))
    return NoiseSpec(t1_s=t1, tphi_s=tphi)


def _parse_coupling(entry: Dict, path: str, n: int) -> CouplingSpec:
    pair = _get(entry, "pair", path)
    if not isinstance(pair, list) or len(pair) != 2:
        raise ConfigError(f"{path}.pair", "expected two qubit indices")
    a, b = (_integer(q, f"{path}.pair", 0) for q in pair)
    if a == b or max(a, b) >= n:
        raise ConfigError(f"{path}.pair", f"indices must be distinct and below {n}")
    kind = entry.get("type")
    j_default = DEFAULT_J_KHZ if kind == "zz" else 0.0
    a_default = DEFAULT_A_EX_KHZ if kind == "exchange" else 0.0
    j = _number(_get(entry, "j_khz", path, j_default), f"{path}.j_khz")
    a_ex = _number(_get(entry, "a_ex_khz", path, a_default), f"{path}.a_ex_khz")
    return CouplingSpec(pair=(a, b), zz_strength=TWO_PI * j * 1e3, exchange_strength=TWO_PI * a_ex * 1e3)


def parse_system(doc: Dict, sigma_s: float = DEFAULT_SIGMA_S, truncation: float = DEFAULT_TRUNCATION,
                 path: str = "system") -> SystemSpec:
    """SystemSpec from the unit-suffixed ``system`` block."""
    n = _integer(_get(doc, "n_qubits", path, 2), f"{path}.n_qubits", 1)
    if n > MAX_QUBITS:
        raise ConfigError(f"{path}.n_qubits", f"must be <= {MAX_QUBITS}")
    detunings = [TWO_PI * v * 1e6 for v in _per_qubit(doc, "detuning_mhz", path, n, 0.0)]
    pi_amps = _per_qubit(doc, "pi_amplitude_au", path, n, DEFAULT_PI_AMPLITUDE)
    for i, amp in enumerate(pi_amps):
        if amp <= 0:
            raise ConfigError(f"{path}.pi_amplitude_au[{i}]", "must be > 0")
    drive = [v * 1e9 for v in _per_qubit(doc, "drive_frequency_ghz", path, n, 4.962)]

    noise_docs = _get(doc, "noise", path, [{}] * n)
    if not isinstance(noise_docs, list) or len(noise_docs) != n:
        raise ConfigError(f"{path}.noise", f"expected a list of {n} entries")
    noise = [_parse_noise(e, f"{path}.noise[{i}]") for i, e in enumerate(noise_docs)]

    coupling_docs = _get(doc, "couplings", path, [])
    if not isinstance(coupling_docs, list):
        raise ConfigError(f"{path}.couplings", "expected a list")
    couplings = [_parse_coupling(e, f"{path}.couplings[{i}]", n) for i, e in enumerate(coupling_docs)]

    rate = doc.get("rabi_rate_rad_per_us_per_au")
    if rate is None:
        rate_per_s = rabi_rate_for_pi_amplitude(pi_amps[0], sigma_s, truncation)
    else:
        rate_per_s = _number(rate, f"{path}.rabi_rate_rad_per_us_per_au", 0.0) * 1e6
    try:
        return SystemSpec(
            n_qubits=n,
            detunings=tuple(detunings),
            couplings=tuple(couplings),
            noise=tuple(noise),
            rabi_rate_per_amp=rate_per_s,
            pi_amplitudes=tuple(pi_amps),
            drive_frequencies_hz=tuple(drive),
        )
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(path, str(e)) from e


def _parse_delays(value: Any) -> Tuple[float, ...]:
    path = "delays_us"
    if isinstance(value, dict):
        start = _number(_get(value, "start", path, 0.0), f"{path}.start", 0.0)
        stop = _number(_get(value, "stop", path), f"{path}.stop", start)
        count = _integer(_get(value, "count", path), f"{path}.count", 1)
        values = list(np.linspace(start, stop, count)) if count > 1 else [start]
    elif isinstance(value, list):
        values = [_number(v, f"{path}[{i}]", 0.0) for i, v in enumerate(value)]
    else:
        raise ConfigError(path, "expected a list or a {start, stop, count} object")
    if not values:
        raise ConfigError(path, "must not be empty")
    if any(b < a for a, b in zip(values, values[1:])):
        raise ConfigError(path, "must be sorted in ascending order")
    return tuple(float(v) * 1e-6 for v in values)


def _parse_sequence(value: Any) -> SequenceName:
    key = str(value).strip().lower().replace("-", "_")
    if key not in _SEQUENCE_ALIASES:
        raise ConfigError("sequence", f"unknown sequence {value!r}; expected one of "
                                      f"{sorted({s.value for s in SequenceName})}")
    return _SEQUENCE_ALIASES[key]


def _parse_readout(doc: Optional[Dict]) -> Optional[IQModel]:
    if not doc or not doc.get("enabled", False):
        return None
    path = "readout"
    sigma = _number(_get(doc, "cloud_sigma", path, 1.0 / 3.0), f"{path}.cloud_sigma", 0.0, strict=True)
    c0 = _get(doc, "center0", path, [-1.0, 0.0])
    c1 = _get(doc, "center1", path, [1.0, 0.0])
    return IQModel(center0=tuple(_number(v, f"{path}.center0") for v in c0),
                   center1=tuple(_number(v, f"{path}.center1") for v in c1),
                   cloud_sigma=sigma)


def read_document(path) -> Dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(str(path), f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e
    except OSError as e:
        raise ConfigError(str(path), f"cannot read config: {e.strerror}") from e


def load_document(source: str) -> Dict:
    """Raw document for a preset name or a JSON file path."""
    if source in PRESETS:
        return load_preset(source)
    return read_document(source)


def canonical_json(doc: Dict) -> str:
    return json.dumps(json.loads(dumps(doc)), sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment plus the canonical document it was parsed from."""

    name: str
    spec: SystemSpec
    sequence: SequenceName
    delays_s: Tuple[float, ...]
    shots: int
    seed: int
    exact: bool
    use_raw: bool
    sigma_s: float
    truncation: float
    integrator: IntegratorConfig
    readout: Optional[IQModel]
    output_dir: str
    output_format: str
    coherence_model: str
    workers: int
    reference_t2_us: Optional[float]
    calibration: CalibrationConfig
    document: Dict = field(compare=False, repr=False)

    @classmethod
    def from_dict(cls, doc: Dict) -> "ExperimentConfig":
        """
        Parse and validate a config document.

        Raises:
            ConfigError: naming the offending field path
        """
        if not isinstance(doc, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        doc = copy.deepcopy(doc)
        pulse = _get(doc, "pulse", "", {})
        sigma_s = _number(_get(pulse, "sigma_ns", "pulse", DEFAULT_SIGMA_S * 1e9), "pulse.sigma_ns", 0.0, True) * 1e-9
        truncation = _number(_get(pulse, "truncation_sigmas", "pulse", DEFAULT_TRUNCATION),
                             "pulse.truncation_sigmas", 0.0, True)
        spec = parse_system(_get(doc, "system", ""), sigma_s, truncation)
        if spec.n_qubits != 2:
            raise ConfigError("system.n_qubits", "experiments reconstruct two-qubit states; use 2")
        sequence = _parse_sequence(_get(doc, "sequence", ""))

        integ = _get(doc, "integrator", "", {})
        method = _get(integ, "method", "integrator", "hybrid")
        if method not in METHODS:
            raise ConfigError("integrator.method", f"must be one of {METHODS}")
        integrator = IntegratorConfig(
            dt_s=_number(_get(integ, "dt_ns", "integrator", 0.2), "integrator.dt_ns", 0.0, True) * 1e-9,
            method=method,
            sample_stride=_integer(_get(integ, "sample_stride", "integrator", 50), "integrator.sample_stride", 1),
        )

        outputs = _get(doc, "outputs", "", {})
        fmt = _get(outputs, "format", "outputs", "csv")
        if fmt not in OUTPUT_FORMATS:
            raise ConfigError("outputs.format", f"must be one of {OUTPUT_FORMATS}")
        name = str(_get(doc, "name", "", "experiment"))
        coherence_model = _get(doc, "coherence_model", "", "auto")
        if coherence_model not in ("auto", "exponential", "exp_cos"):
            raise ConfigError("coherence_model", "must be auto, exponential or exp_cos")
        reference = _get(doc, "reference_t2_us", "", None)

        cal = _get(doc, "calibration", "", {})
        seed = _integer(_get(doc, "seed", "", 1234), "seed", 0)
        calibration = CalibrationConfig(
            noise_level=_number(_get(cal, "noise_level", "calibration", 0.0), "calibration.noise_level", 0.0),
            ramsey_artificial_detuning_hz=_number(
                _get(cal, "ramsey_artificial_detuning_mhz", "calibration", 2.0),
                "calibration.ramsey_artificial_detuning_mhz", 0.0, True) * 1e6,
            spectroscopy_span_hz=_number(_get(cal, "spectroscopy_span_mhz", "calibration", 20.0),
                                         "calibration.spectroscopy_span_mhz", 0.0, True) * 1e6,
            spectroscopy_duration_s=_number(_get(cal, "spectroscopy_duration_us", "calibration", 20.0),
                                            "calibration.spectroscopy_duration_us", 0.0, True) * 1e-6,
            sigma_s=sigma_s,
            seed=seed,
            dt_s=integrator.dt_s,
        )

        return cls(
            name=name,
            spec=spec,
            sequence=sequence,
            delays_s=_parse_delays(_get(doc, "delays_us", "")),
            shots=_integer(_get(doc, "shots", "", 4000), "shots", 1),
            seed=seed,
            exact=bool(_get(doc, "exact", "", False)),
            use_raw=bool(_get(doc, "use_raw", "", False)),
            sigma_s=sigma_s,
            truncation=truncation,
            integrator=integrator,
            readout=_parse_readout(doc.get("readout")),
            output_dir=str(_get(outputs, "dir", "outputs", f"output/{name}")),
            output_format=fmt,
            coherence_model=coherence_model,
            workers=_integer(_get(doc, "workers", "", 1), "workers", 1),
            reference_t2_us=None if reference is None else _number(reference, "reference_t2_us", 0.0),
            calibration=calibration,
            document=doc,
        )

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_dict(read_document(path))

    @classmethod
    def load(cls, source: str) -> "ExperimentConfig":
        """A preset name or a path to a JSON document."""
        return cls.from_dict(load_document(source))

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        """
        Copy with top-level fields replaced; ``out`` and ``format`` go to ``outputs``.

        ``None`` values are ignored so CLI flags can be passed straight through.
        """
        doc = copy.deepcopy(self.document)
        for key, value in overrides.items():
            if value is None:
                continue
            if key == "out":
                doc.setdefault("outputs", {})["dir"] = str(value)
            elif key == "format":
                doc.setdefault("outputs", {})["format"] = value
            else:
                doc[key] = value
        return ExperimentConfig.from_dict(doc)

    def canonical(self) -> str:
        return canonical_json(self.document)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()

    def templates(self) -> Tuple[GaussianPulse, Optional[GaussianPulse]]:
        pulses = [GaussianPulse(amplitude=a, center_s=0.0, sigma_s=self.sigma_s, truncation=self.truncation)
                  for a in self.spec.pi_amplitudes]
        return pulses[0], (pulses[1] if len(pulses) > 1 else None)

    def sequence_kind(self, delay_s: float) -> SequenceKind:
        return SequenceKind(self.sequence, delay_s)


# --- per-delay run ---------------------------------------------------------------

@dataclass
class DelayOutcome:
    index: int
    delay_s: float
    free_time_s: float
    result: TomographyResult
    row: DiagnosticsRow
    record: Optional[TomographyRecord] = None

    @property
    def sensor_z(self) -> float:
        return self.result.pauli["ZI"]


def delay_seed(seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(index,))


def run_delay(cfg: ExperimentConfig, index: int) -> DelayOutcome:
    """Build, evolve, measure, reconstruct and diagnose one delay."""
    delay = cfg.delays_s[index]
    kind = cfg.sequence_kind(delay)
    template, impurity_template = cfg.templates()
    schedule = build_sequence(kind, template, impurity_template)
    evolution = evolve(ground_state(cfg.spec.n_qubits), schedule, cfg.spec, cfg.integrator, delay_s=delay)
    rho = evolution.final_state
    if cfg.exact:
        record = None
        result = reconstruct_from_state(rho, delay)
        shots = None
    else:
        record = sample_record(rho, cfg.shots, delay_seed(cfg.seed, index), delay, cfg.readout)
        result = reconstruct(record)
        shots = cfg.shots
    row = diagnose(result.state(cfg.use_raw), delay, shots)
    return DelayOutcome(index, delay, kind.free_evolution_time(), result, row, record)


def _run_delay_job(args) -> DelayOutcome:
    cfg, index = args
    return run_delay(cfg, index)


def _map(fn, jobs: Sequence, workers: int) -> List:
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


# --- manifest -------------------------------------------------------------------

@dataclass
class RunManifest:
    name: str
    config_hash: str
    output_dir: str
    files: Dict[str, str]
    rho_files: List[str]
    created_at: str
    elapsed_s: float
    outcomes: List[DelayOutcome] = field(default_factory=list, repr=False)
    coherence: Optional[CoherenceFit] = None
    version: str = VERSION

    @property
    def rows(self) -> List[DiagnosticsRow]:
        return [o.row for o in self.outcomes]

    def to_dict(self) -> Dict:
        return {
            "schema": "manifest-v1",
            "name": self.name,
            "version": self.version,
            "config_hash": self.config_hash,
            "files": dict(self.files),
            "rho_files": list(self.rho_files),
            "created_at": self.created_at,
            "elapsed_s": self.elapsed_s,
        }


def coherence_frame(outcomes: Sequence[DelayOutcome]) -> pd.DataFrame:
    z = np.array([o.sensor_z for o in outcomes])
    return pd.DataFrame({
        "delay_s": [o.delay_s for o in outcomes],
        "free_time_s": [o.free_time_s for o in outcomes],
        "sensor_z": z,
        "sensor_p1": 0.5 * (1.0 - z),
    })


def fit_sensor_coherence(outcomes: Sequence[DelayOutcome], model: str = "auto") -> Optional[CoherenceFit]:
    """Coherence fit of the sensor's excited population against free-evolution time."""
    frame = coherence_frame(outcomes)
    if len(frame) < 8:
        logger.info("Fewer than 8 delays, skipping the coherence fit")
        return None
    try:
        return fit_coherence_decay(frame["free_time_s"].to_numpy(), frame["sensor_p1"].to_numpy(), model)
    except FitError as e:
        logger.warning(f"Coherence fit failed: {e}")
        return None


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> RunManifest:
    """
    Run every delay of ``cfg`` and write its outputs.

    Args:
        cfg: Validated experiment
        write: Write files under ``cfg.output_dir``; otherwise only return results

    Returns:
        RunManifest indexing the written files

    Raises:
        NumericalError: an integrator abort, naming the offending delay
    """
    started = time.perf_counter()
    logger.info(f"Running '{cfg.name}': {cfg.sequence.value}, {len(cfg.delays_s)} delays, "
                f"{'exact' if cfg.exact else f'{cfg.shots} shots/setting'}")
    jobs = [(cfg, i) for i in range(len(cfg.delays_s))]
    try:
        outcomes = _map(_run_delay_job, jobs, cfg.workers)
    except NumericalError as e:
        logger.error(f"Integrator aborted: {e}")
        raise
    outcomes.sort(key=lambda o: o.index)
    coherence = fit_sensor_coherence(outcomes, cfg.coherence_model)
    if coherence is not None:
        logger.info(f"Sensor T2 = {coherence.t2_s * 1e6:.2f} us ({coherence.model})")

    files: Dict[str, str] = {}
    rho_files: List[str] = []
    out = Path(cfg.output_dir)
    if write:
        files["config"] = str(write_json(out / "config.json", cfg.document).relative_to(out))
        for o in outcomes:
            path = export(o.result, out / "rho" / f"rho_{o.index:04d}", "json")[0]
            rho_files.append(str(path.relative_to(out)))
        files["diagnostics"] = str(export([o.row for o in outcomes], out / "diagnostics",
                                          cfg.output_format)[0].relative_to(out))
        if not cfg.exact:
            files["counts"] = str(export([o.record for o in outcomes], out / "counts", "csv")[0].relative_to(out))
        frame = coherence_frame(outcomes)
        if cfg.output_format == "csv":
            files["coherence"] = str(write_csv(out / "coherence.csv", frame).relative_to(out))
        else:
            files["coherence"] = str(write_json(out / "coherence.json", {
                "schema": "coherence-v1", "rows": frame.to_dict(orient="records")}).relative_to(out))
        files["summary"] = str(write_json(out / "summary.json", {
            "schema": "summary-v1",
            "name": cfg.name,
            "config_hash": cfg.config_hash,
            "reference_t2_us": cfg.reference_t2_us,
            "coherence": coherence.to_dict() if coherence else None,
            "rows": [o.row.summary() for o in outcomes],
        }).relative_to(out))

    manifest = RunManifest(
        name=cfg.name,
        config_hash=cfg.config_hash,
        output_dir=str(out),
        files=files,
        rho_files=rho_files,
        created_at=datetime.now(timezone.utc).isoformat(),
        elapsed_s=time.perf_counter() - started,
        outcomes=outcomes,
        coherence=coherence,
    )
    if write:
        write_json(out / "manifest.json", manifest.to_dict())
        logger.info(f"Wrote {len(rho_files) + len(files) + 1} files to {out}")
    return manifest


# --- sweeps ---------------------------------------------------------------------

def _pair_coupling(system: Dict) -> Dict:
    couplings = system.setdefault("couplings", [])
    for c in couplings:
        if sorted(c.get("pair", [])) == [0, 1]:
            return c
    entry = {"pair": [0, 1], "j_khz": 0.0, "a_ex_khz": 0.0}
    couplings.append(entry)
    return entry


def set_parameter(doc: Dict, parameter: str, value: float) -> Dict:
    """Copy of ``doc`` with one sweepable system parameter replaced."""
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError("sweep.parameter", f"must be one of {SWEEP_PARAMETERS}, got {parameter!r}")
    doc = copy.deepcopy(doc)
    system = doc.setdefault("system", {})
    n = system.get("n_qubits", 2)
    if parameter in ("j_khz", "a_ex_khz"):
        _pair_coupling(system)[parameter] = value
    elif parameter == "detuning_mhz":
        values = list(system.get("detuning_mhz", [0.0] * n))
        values[0] = value
        system["detuning_mhz"] = values
    else:
        noise = system.setdefault("noise", [{} for _ in range(n)])
        if parameter == "t2_us":
            noise[0].pop("tphi_us", None)
            noise[0]["t2_us"] = value
        else:
            noise[1]["t1_us"] = value
    return doc


@dataclass
class SweepManifest:
    parameter: str
    values: List[float]
    runs: List[RunManifest]
    summary: pd.DataFrame


def _run_point_job(args) -> RunManifest:
    doc, write = args
    return run_experiment(ExperimentConfig.from_dict(doc), write)


def run_sweep(cfg: ExperimentConfig, parameter: str, values: Sequence[float], write: bool = True) -> SweepManifest:
    """
    Repeat ``cfg`` for each value of ``parameter``.

    Points share the base seed and write to ``<out>/<parameter>=<value>``, so
    the outputs do not depend on execution order.
    """
    if not values:
        raise ConfigError("sweep.values", "must not be empty")
    base = Path(cfg.output_dir)
    docs = []
    for value in values:
        doc = set_parameter(cfg.document, parameter, float(value))
        doc["workers"] = 1
        doc.setdefault("outputs", {})["dir"] = str(base / f"{parameter}={value:g}")
        docs.append(doc)
    for doc in docs:
        ExperimentConfig.from_dict(doc)
    runs = _map(_run_point_job, [(doc, write) for doc in docs], cfg.workers)

    rows = []
    for value, run in zip(values, runs):
        c = run.coherence
        rows.append({
            parameter: float(value),
            "t2_us": c.t2_s * 1e6 if c else float("nan"),
            "oscillation_freq_hz": c.oscillation_freq_hz if c else float("nan"),
            "ppt_min": min(r.ppt_min for r in run.rows),
            "chsh_max": max(r.chsh_max for r in run.rows),
            "config_hash": run.config_hash,
        })
    summary = pd.DataFrame(rows)
    if write:
        write_csv(base / "sweep.csv", summary)
        logger.info(f"Sweep over {parameter}: {len(values)} points written under {base}")
    return SweepManifest(parameter, [float(v) for v in values], runs, summary)
