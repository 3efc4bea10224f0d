#!/usr/bin/env python3
"""
Export tests: file schemas, headers and float formatting.
"""

import json
import math
import os
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from services.diagnostics import diagnose
from services.dynamics import EvolutionResult
from services.export import export, load_rho, round_floats
from services.pulses import SequenceKind, SequenceName, build_sequence
from services.qcore import ket, projector
from services.tomography import expected_record, reconstruct_from_state

BELL = projector((ket("00") + ket("11")) / math.sqrt(2))


def random_state(seed):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def test_round_floats():
    assert round_floats(1 / 3) == 0.333333333333
    assert round_floats({"a": [np.float64(2.0), np.int64(3), np.bool_(True)]}) == {"a": [2.0, 3, True]}
    assert round_floats(float("nan")) is None


def test_rho_json_schema_and_round_trip(tmp_path):
    result = reconstruct_from_state(random_state(7), delay_s=2.5e-6)
    path = export(result, tmp_path / "rho_0000", "json")[0]
    assert path.name == "rho_0000.json"

    doc = json.loads(path.read_text())
    assert doc["schema"] == "rho-v1"
    assert doc["delay_s"] == 2.5e-6
    assert len(doc["rho_phys"]) == 4
    assert all(len(row) == 4 and all(len(z) == 2 for z in row) for row in doc["rho_phys"])

    assert_allclose(load_rho(path), result.rho_phys, atol=1e-12)
    assert_allclose(load_rho(path, use_raw=True), result.rho_raw, atol=1e-12)


def test_load_rho_rejects_other_schemas(tmp_path):
    path = tmp_path / "other.json"
    path.write_text(json.dumps({"schema": "calibration-v1"}))
    with pytest.raises(ValueError):
        load_rho(path)


def test_diagnostics_csv_header(tmp_path):
    rows = [diagnose(BELL, 0.0), diagnose(np.eye(4) / 4, 1e-6)]
    path = export(rows, tmp_path / "diagnostics", "csv")[0]
    lines = path.read_text().splitlines()
    assert lines[0] == "delay_s,P0,P1,P01,P0P1,ppt_min,chsh_max,chsh_argmax"
    assert len(lines) == 3


def test_diagnostics_json(tmp_path):
    path = export([diagnose(BELL, 0.0)], tmp_path / "diagnostics", "json")[0]
    doc = json.loads(path.read_text())
    assert doc["schema"] == "diagnostics-v1"
    assert doc["rows"][0]["ppt_min"] == pytest.approx(-0.5)


def test_counts_csv(tmp_path):
    records = [expected_record(BELL, 1000, delay_s=d) for d in (0.0, 1e-6)]
    path = export(records, tmp_path / "counts", "csv")[0]
    lines = path.read_text().splitlines()
    assert lines[0] == "delay_s,setting,n00,n01,n10,n11,shots"
    assert len(lines) == 1 + 2 * 9


def test_schedule_and_evolution(tmp_path):
    schedule = build_sequence(SequenceKind(SequenceName.HAHN_ECHO, 1e-6))
    doc = json.loads(export(schedule, tmp_path / "schedule", "json")[0].read_text())
    assert doc["schema"] == "schedule-v1"
    assert len(doc["items"]) == len(schedule.items)

    states = [np.diag([1.0, 0.0]).astype(complex), np.diag([0.5, 0.5]).astype(complex)]
    evolution = EvolutionResult(np.array([0.0, 1e-6]), states)
    csv_path = export(evolution, tmp_path / "evolution", "csv")[0]
    assert csv_path.read_text().splitlines()[0] == "time_s,re_00,im_00,re_01,im_01,re_10,im_10,re_11,im_11"
    doc = json.loads(export(evolution, tmp_path / "evolution", "json")[0].read_text())
    assert doc["schema"] == "evolution-v1"
    assert doc["times_s"] == [0.0, 1e-6]


def test_unsupported_exports(tmp_path):
    with pytest.raises(ValueError):
        export([diagnose(BELL)], tmp_path / "x", "xml")
    with pytest.raises(ValueError):
        export([1, 2, 3], tmp_path / "x", "csv")
