"""
Shipped experiment presets.

Sensor coherence times are the measured hardware values; the coupled-run values
are kept as ``reference_t2_us`` for comparison only and never feed the simulation.
"""

import copy
from typing import Dict, List

DEFAULT_J_KHZ = 50.0
DEFAULT_A_EX_KHZ = 100.0

_COMMON = {
    "shots": 4000,
    "seed": 1234,
    "exact": False,
    "pulse": {"sigma_ns": 10.0, "truncation_sigmas": 3.0},
    "integrator": {"dt_ns": 0.2, "method": "hybrid", "sample_stride": 50},
    "outputs": {"format": "csv"},
}


def _preset(name: str, description: str, sequence: str, noise: List[Dict], couplings: List[Dict],
            delays: Dict, reference_t2_us: float) -> Dict:
    doc = copy.deepcopy(_COMMON)
    doc.update({
        "name": name,
        "description": description,
        "reference_t2_us": reference_t2_us,
        "sequence": sequence,
        "delays_us": delays,
        "system": {
            "n_qubits": 2,
            "detuning_mhz": [0.0, 0.0],
            "pi_amplitude_au": [0.095, 0.095],
            "drive_frequency_ghz": [4.962, 4.962],
            "noise": noise,
            "couplings": couplings,
        },
    })
    doc["outputs"]["dir"] = f"output/{name}"
    return doc


PRESETS: Dict[str, Dict] = {
    "nuclear-natural": _preset(
        "nuclear-natural",
        "NV sensor next to a nuclear spin, no coupling: natural Hahn-echo decay",
        "nuclear_impurity",
        [{"t1_us": None, "t2_us": 109.40}, {"t1_us": None, "tphi_us": None}],
        [],
        {"start": 0.0, "stop": 150.0, "count": 31},
        109.40,
    ),
    "nuclear-sdid": _preset(
        "nuclear-sdid",
        "ZZ-coupled nuclear spin relaxing from |1>: spectator-decay induced dephasing",
        "nuclear_impurity",
        [{"t1_us": None, "t2_us": 109.40}, {"t1_us": 150.0, "tphi_us": None}],
        [{"pair": [0, 1], "j_khz": DEFAULT_J_KHZ, "a_ex_khz": 0.0}],
        {"start": 0.0, "stop": 150.0, "count": 31},
        63.10,
    ),
    "nvnv-natural": _preset(
        "nvnv-natural",
        "Two NV centres driven with Hahn echoes, no coupling",
        "nvnv_impurity",
        [{"t1_us": None, "t2_us": 28.50}, {"t1_us": None, "t2_us": 28.50}],
        [],
        {"start": 0.0, "stop": 30.0, "count": 121},
        28.50,
    ),
    "nvnv-exchange": _preset(
        "nvnv-exchange",
        "Two exchange-coupled NV centres driven with Hahn echoes from |+->",
        "nvnv_impurity",
        [{"t1_us": None, "t2_us": 28.50}, {"t1_us": None, "t2_us": 28.50}],
        [{"pair": [0, 1], "j_khz": 0.0, "a_ex_khz": DEFAULT_A_EX_KHZ}],
        {"start": 0.0, "stop": 30.0, "count": 121},
        19.10,
    ),
    "nvnv-nuclear-sequence": _preset(
        "nvnv-nuclear-sequence",
        "NV-NV pair measured with the nuclear-impurity sequence (impurity pi pulse then relaxation)",
        "nuclear_impurity",
        [{"t1_us": None, "t2_us": 28.50}, {"t1_us": 60.0, "tphi_us": None}],
        [{"pair": [0, 1], "j_khz": DEFAULT_J_KHZ, "a_ex_khz": 0.0}],
        {"start": 0.0, "stop": 40.0, "count": 41},
        21.80,
    ),
}


def preset_names() -> List[str]:
    return sorted(PRESETS)


def load_preset(name: str) -> Dict:
    """Deep copy of a preset document."""
    if name not in PRESETS:
        raise KeyError(f"Unknown preset '{name}'. Available: {', '.join(preset_names())}")
    return copy.deepcopy(PRESETS[name])
