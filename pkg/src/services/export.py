"""
File export: CSV through pandas, JSON with a schema tag and 12 significant digits.
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Union

import numpy as np
import pandas as pd

from services.diagnostics import DIAGNOSTICS_COLUMNS, DiagnosticsRow
from services.dynamics import EvolutionResult
from services.fitting import FitResult, SweepData
from services.pulses import PulseSchedule
from services.qcore import from_pairs, to_pairs
from services.tomography import TomographyRecord, TomographyResult, records_to_frame

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 12
FLOAT_FORMAT = f"%.{SIGNIFICANT_DIGITS}g"
FORMATS = ("csv", "json")
PathLike = Union[str, Path]


def round_floats(value: Any) -> Any:
    """Recursively round floats to 12 significant digits; non-finite become null."""
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return None
        return float(f"{value:.{SIGNIFICANT_DIGITS}g}")
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, dict):
        return {str(k): round_floats(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [round_floats(v) for v in value]
    if isinstance(value, np.ndarray):
        return round_floats(value.tolist())
    return value


def dumps(doc: Dict) -> str:
    return json.dumps(round_floats(doc), indent=2, sort_keys=True) + "\n"


def write_json(path: PathLike, doc: Dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(doc))
    logger.debug(f"Wrote {path}")
    return path


def read_json(path: PathLike) -> Dict:
    return json.loads(Path(path).read_text())


def write_csv(path: PathLike, df: pd.DataFrame) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.debug(f"Wrote {path} ({len(df)} rows)")
    return path


# --- documents ------------------------------------------------------------------

def rho_document(result: TomographyResult) -> Dict:
    return {
        "schema": "rho-v1",
        "delay_s": result.delay_s,
        "rho_raw": to_pairs(result.rho_raw),
        "rho_phys": to_pairs(result.rho_phys),
        "min_raw_eigenvalue": result.min_raw_eigenvalue,
        "pauli": result.pauli.as_dict(),
    }


def load_rho(path: PathLike, use_raw: bool = False) -> np.ndarray:
    doc = read_json(path)
    if doc.get("schema") != "rho-v1":
        raise ValueError(f"{path}: expected schema rho-v1, got {doc.get('schema')!r}")
    return from_pairs(doc["rho_raw" if use_raw else "rho_phys"])


def evolution_frame(result: EvolutionResult) -> pd.DataFrame:
    """time_s followed by re/im of every matrix entry, row-major."""
    d = result.states[0].shape[0]
    columns = ["time_s"]
    for i in range(d):
        for j in range(d):
            columns += [f"re_{i}{j}", f"im_{i}{j}"]
    rows = []
    for t, rho in zip(result.times, result.states):
        flat = np.asarray(rho).reshape(-1)
        rows.append([float(t)] + [v for z in flat for v in (z.real, z.imag)])
    return pd.DataFrame(rows, columns=columns)


def evolution_document(result: EvolutionResult) -> Dict:
    return {
        "schema": "evolution-v1",
        "times_s": [float(t) for t in result.times],
        "states": [to_pairs(rho) for rho in result.states],
    }


def schedule_document(schedule: PulseSchedule) -> Dict:
    return {
        "schema": "schedule-v1",
        "n_qubits": schedule.n_qubits,
        "total_duration_s": schedule.total_duration_s,
        "items": schedule.to_records(),
    }


def diagnostics_frame(rows: Iterable[DiagnosticsRow]) -> pd.DataFrame:
    return pd.DataFrame([r.to_record() for r in rows], columns=DIAGNOSTICS_COLUMNS)


def sweep_frame(data: SweepData, fit: FitResult, model) -> pd.DataFrame:
    """x, y and the fitted curve evaluated at x."""
    params = np.array([fit.params[name] for name in model.param_names])
    return pd.DataFrame({"x": data.x, "y": data.y, "fit": model(data.x, params)})


# --- dispatcher ----------------------------------------------------------------

def export(result, path: PathLike, fmt: str = "json") -> List[Path]:
    """
    Write ``result`` to ``path`` in ``fmt``.

    Supports TomographyResult (JSON only), EvolutionResult, PulseSchedule (JSON only),
    a list of DiagnosticsRow and a list of TomographyRecord (CSV only).

    Raises:
        ValueError: unknown format or unsupported combination
        OSError: the file cannot be written
    """
    if fmt not in FORMATS:
        raise ValueError(f"Unknown export format {fmt!r}; expected one of {FORMATS}")
    path = Path(path)
    if isinstance(result, TomographyResult):
        return [write_json(path.with_suffix(".json"), rho_document(result))]
    if isinstance(result, PulseSchedule):
        return [write_json(path.with_suffix(".json"), schedule_document(result))]
    if isinstance(result, EvolutionResult):
        if fmt == "csv":
            return [write_csv(path.with_suffix(".csv"), evolution_frame(result))]
        return [write_json(path.with_suffix(".json"), evolution_document(result))]
    items = list(result)
    if items and all(isinstance(r, DiagnosticsRow) for r in items):
        if fmt == "csv":
            return [write_csv(path.with_suffix(".csv"), diagnostics_frame(items))]
        return [write_json(path.with_suffix(".json"),
                           {"schema": "diagnostics-v1", "rows": [r.summary() for r in items]})]
    if items and all(isinstance(r, TomographyRecord) for r in items):
        return [write_csv(path.with_suffix(".csv"), records_to_frame(items))]
    raise ValueError(f"Cannot export {type(result).__name__} as {fmt}")
