#!/usr/bin/env python3
"""
Experiment harness tests: config validation, presets, output layout,
determinism and parameter sweeps.
"""

import json
import os
import pickle
import sys
from pathlib import Path

import pandas as pd
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from services.exceptions import CalibrationError, ConfigError, NumericalError
from services.harness import (ExperimentConfig, delay_seed, read_document, run_experiment, run_sweep,
                              set_parameter)
from services.hamiltonian import TWO_PI
from services.presets import PRESETS, load_preset, preset_names
from services.pulses import SequenceName

CONFIG_DIR = Path(__file__).parent / 'configs'


def small_doc(**overrides):
    doc = load_preset("nvnv-exchange")
    doc.update({"delays_us": {"start": 0.0, "stop": 5.0, "count": 20}, "shots": 500})
    doc.update(overrides)
    return doc


def config_error(doc):
    with pytest.raises(ConfigError) as excinfo:
        ExperimentConfig.from_dict(doc)
    return excinfo.value.field


def test_presets_match_shipped_configs():
    assert preset_names() == sorted(p.stem for p in CONFIG_DIR.glob("*.json"))
    for name in PRESETS:
        assert read_document(CONFIG_DIR / f"{name}.json") == load_preset(name)


def test_load_by_name_and_path():
    by_name = ExperimentConfig.load("nuclear-sdid")
    by_path = ExperimentConfig.load(str(CONFIG_DIR / "nuclear-sdid.json"))
    assert by_name.config_hash == by_path.config_hash
    assert by_name.sequence is SequenceName.NUCLEAR_IMPURITY
    assert by_name.spec.couplings[0].zz_strength == pytest.approx(TWO_PI * 50e3)
    assert by_name.spec.noise[1].t1_s == pytest.approx(150e-6)


def test_parsed_units():
    cfg = ExperimentConfig.from_dict(small_doc())
    assert len(cfg.delays_s) == 20
    assert cfg.delays_s[-1] == pytest.approx(5e-6)
    assert cfg.spec.couplings[0].exchange_strength == pytest.approx(TWO_PI * 100e3)
    assert cfg.spec.noise[0].t2_s == pytest.approx(28.5e-6)
    assert cfg.integrator.dt_s == pytest.approx(0.2e-9)
    assert cfg.sigma_s == pytest.approx(10e-9)
    assert cfg.calibration.spectroscopy_duration_s == pytest.approx(20e-6)
    cfg = ExperimentConfig.from_dict(small_doc(calibration={"spectroscopy_duration_us": 5.0}))
    assert cfg.calibration.spectroscopy_duration_s == pytest.approx(5e-6)


def test_config_errors_name_the_field():
    doc = small_doc()
    del doc["sequence"]
    assert config_error(doc) == "sequence"
    assert config_error(small_doc(sequence="cpmg")) == "sequence"
    assert config_error(small_doc(delays_us=[3.0, 1.0])) == "delays_us"
    assert config_error(small_doc(shots=0)) == "shots"
    assert config_error(small_doc(outputs={"format": "xml"})) == "outputs.format"
    assert config_error(small_doc(integrator={"dt_ns": -1.0})) == "integrator.dt_ns"
    bad_window = small_doc(calibration={"spectroscopy_duration_us": 0.0})
    assert config_error(bad_window) == "calibration.spectroscopy_duration_us"

    doc = small_doc()
    doc["system"]["noise"][0] = {"t1_us": 10.0, "t2_us": 50.0}
    assert config_error(doc) == "system.noise[0].t2_us"

    doc = small_doc()
    doc["system"]["couplings"][0]["pair"] = [0, 0]
    assert config_error(doc) == "system.couplings[0].pair"

    doc = small_doc()
    doc["system"]["detuning_mhz"] = [0.0]
    assert config_error(doc) == "system.detuning_mhz"

    doc = small_doc()
    doc["system"]["n_qubits"] = 1
    for key in ("detuning_mhz", "pi_amplitude_au", "drive_frequency_ghz", "noise"):
        doc["system"][key] = doc["system"][key][:1]
    doc["system"]["couplings"] = []
    assert config_error(doc) == "system.n_qubits"


def test_bad_json_file(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{\"name\": ")
    with pytest.raises(ConfigError):
        read_document(path)
    with pytest.raises(ConfigError):
        ExperimentConfig.load(str(tmp_path / "missing.json"))


def test_overrides():
    cfg = ExperimentConfig.from_dict(small_doc())
    changed = cfg.with_overrides(seed=7, out="elsewhere", format="json", shots=None)
    assert changed.seed == 7
    assert changed.output_dir == "elsewhere"
    assert changed.output_format == "json"
    assert changed.shots == cfg.shots
    assert changed.config_hash != cfg.config_hash
    assert cfg.with_overrides().config_hash == cfg.config_hash


def test_delay_seeds_are_independent_of_order():
    a = delay_seed(1234, 3).generate_state(4)
    b = delay_seed(1234, 3).generate_state(4)
    assert (a == b).all()
    assert not (delay_seed(1234, 4).generate_state(4) == a).all()


def test_run_writes_expected_layout(tmp_path):
    cfg = ExperimentConfig.from_dict(small_doc(outputs={"dir": str(tmp_path / "run"), "format": "csv"}))
    manifest = run_experiment(cfg)
    out = tmp_path / "run"
    assert len(manifest.rho_files) == 20
    assert len(list((out / "rho").glob("rho_*.json"))) == 20
    assert set(manifest.files) == {"config", "diagnostics", "counts", "coherence", "summary"}
    diagnostics = pd.read_csv(out / "diagnostics.csv")
    assert len(diagnostics) == 20
    assert list(diagnostics.columns) == ["delay_s", "P0", "P1", "P01", "P0P1", "ppt_min", "chsh_max",
                                         "chsh_argmax"]
    assert len(pd.read_csv(out / "counts.csv")) == 20 * 9
    summary = json.loads((out / "summary.json").read_text())
    assert summary["schema"] == "summary-v1"
    assert summary["config_hash"] == cfg.config_hash
    assert json.loads((out / "manifest.json").read_text())["schema"] == "manifest-v1"
    rho = json.loads((out / manifest.rho_files[0]).read_text())
    assert rho["schema"] == "rho-v1"


def test_exact_json_run_has_no_counts(tmp_path):
    cfg = ExperimentConfig.from_dict(small_doc(exact=True, outputs={"dir": str(tmp_path), "format": "json"}))
    manifest = run_experiment(cfg)
    assert "counts" not in manifest.files
    assert json.loads((tmp_path / "diagnostics.json").read_text())["schema"] == "diagnostics-v1"
    assert json.loads((tmp_path / "coherence.json").read_text())["schema"] == "coherence-v1"


def _output_bytes(root: Path):
    return {str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file() and p.name != "manifest.json"}


def test_outputs_are_byte_identical_across_runs_and_workers(tmp_path):
    first = small_doc(outputs={"dir": str(tmp_path / "a"), "format": "csv"})
    second = small_doc(outputs={"dir": str(tmp_path / "b"), "format": "csv"}, workers=2)
    run_experiment(ExperimentConfig.from_dict(first))
    run_experiment(ExperimentConfig.from_dict(second))
    a, b = _output_bytes(tmp_path / "a"), _output_bytes(tmp_path / "b")
    assert a.keys() == b.keys()
    for name in a:
        if name in ("config.json", "summary.json"):
            # the documents differ in outputs.dir and workers only
            continue
        assert a[name] == b[name], name


def test_seed_changes_counts():
    one = run_experiment(ExperimentConfig.from_dict(small_doc(seed=1)), write=False)
    two = run_experiment(ExperimentConfig.from_dict(small_doc(seed=2)), write=False)
    assert one.outcomes[5].record.counts != two.outcomes[5].record.counts


def test_set_parameter():
    doc = load_preset("nuclear-natural")
    updated = set_parameter(doc, "j_khz", 25.0)
    assert updated["system"]["couplings"] == [{"pair": [0, 1], "j_khz": 25.0, "a_ex_khz": 0.0}]
    assert doc["system"]["couplings"] == []
    updated = set_parameter(doc, "t2_us", 80.0)
    assert updated["system"]["noise"][0]["t2_us"] == 80.0
    updated = set_parameter(doc, "impurity_t1_us", 90.0)
    assert updated["system"]["noise"][1]["t1_us"] == 90.0
    with pytest.raises(ConfigError):
        set_parameter(doc, "shots", 10)


def test_sweep(tmp_path):
    doc = small_doc(exact=True, outputs={"dir": str(tmp_path), "format": "csv"})
    sweep = run_sweep(ExperimentConfig.from_dict(doc), "a_ex_khz", [50.0, 100.0])
    assert list(sweep.summary["a_ex_khz"]) == [50.0, 100.0]
    assert list(sweep.summary.columns) == ["a_ex_khz", "t2_us", "oscillation_freq_hz", "ppt_min", "chsh_max",
                                           "config_hash"]
    assert (tmp_path / "a_ex_khz=50" / "manifest.json").exists()
    assert (tmp_path / "a_ex_khz=100" / "diagnostics.csv").exists()
    assert (tmp_path / "sweep.csv").exists()
    assert sweep.runs[0].config_hash != sweep.runs[1].config_hash
    with pytest.raises(ConfigError):
        run_sweep(ExperimentConfig.from_dict(doc), "a_ex_khz", [])


def test_errors_survive_pickling():
    for error in (ConfigError("system.n_qubits", "bad"), NumericalError("trace drift", 2e-6),
                  CalibrationError("rabi", "flat")):
        restored = pickle.loads(pickle.dumps(error))
        assert type(restored) is type(error)
        assert str(restored) == str(error)
    assert pickle.loads(pickle.dumps(NumericalError("x", 1e-6))).delay_s == 1e-6
