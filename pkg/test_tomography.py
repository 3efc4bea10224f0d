#!/usr/bin/env python3
"""
Tomography tests: exact round trips, shot-noise scaling, PSD projection
and the counts table format.
"""

import math
import os
import sys

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose

sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from services.measurement import CountTable
from services.qcore import ket, projector, trace_distance
from services.tomography import (SETTING_LABELS, PauliVector, TomographyRecord, assemble_pauli_vector,
                                 expected_record, linear_inversion, pauli_vector_from_state, project_psd,
                                 reconstruct, reconstruct_from_state, records_from_csv, records_from_frame,
                                 records_to_frame, reduced_states, sample_record, settings_list, truncate_eigenvalues)

BELL = projector((ket("00") + ket("11")) / math.sqrt(2))


def random_state(rng):
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def werner(p):
    return p * BELL + (1 - p) * np.eye(4) / 4


def test_settings_are_row_major():
    assert SETTING_LABELS == ("XX", "XY", "XZ", "YX", "YY", "YZ", "ZX", "ZY", "ZZ")
    assert len(settings_list()) == 9


def test_exact_round_trip_of_random_states():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        rho = random_state(rng)
        result = reconstruct_from_state(rho)
        assert trace_distance(result.rho_phys, rho) < 1e-10
        assert trace_distance(result.rho_raw, rho) < 1e-10


def test_bell_pauli_vector():
    v = pauli_vector_from_state(BELL)
    assert v["XX"] == pytest.approx(1.0)
    assert v["YY"] == pytest.approx(-1.0)
    assert v["ZZ"] == pytest.approx(1.0)
    assert v["XI"] == pytest.approx(0.0)
    assert v.as_dict()["II"] == 1.0
    assert_allclose(linear_inversion(v), BELL, atol=1e-12)


def test_sampled_coefficients_within_shot_bound():
    rng = np.random.default_rng(9)
    rho = random_state(rng)
    shots = 10_000
    measured = assemble_pauli_vector(sample_record(rho, shots, seed=17)).coefficients
    exact = pauli_vector_from_state(rho).coefficients
    assert np.max(np.abs(measured - exact)) < 4 / math.sqrt(shots)


def test_sampling_is_reproducible():
    a = sample_record(BELL, 200, seed=5, delay_s=1e-6)
    b = sample_record(BELL, 200, seed=np.random.SeedSequence(5), delay_s=1e-6)
    assert a.counts == b.counts
    assert a.delay_s == 1e-6


def test_expected_record_reconstructs_bell_state():
    result = reconstruct(expected_record(BELL, 10_000))
    assert trace_distance(result.rho_phys, BELL) < 1e-3
    assert all(c.shots == 10_000 for c in expected_record(BELL, 10_000).counts.values())


def test_error_scales_as_inverse_square_root_of_shots():
    rho = werner(0.6)
    shot_grid = [100, 1000, 10_000]
    medians = []
    for i, shots in enumerate(shot_grid):
        errors = [trace_distance(reconstruct(sample_record(rho, shots, seed=1000 * i + k)).rho_raw, rho)
                  for k in range(40)]
        medians.append(np.median(errors))
    slope = np.polyfit(np.log10(shot_grid), np.log10(medians), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.1)


def test_truncate_eigenvalues():
    assert_allclose(truncate_eigenvalues([1.2, 0.0, 0.0, -0.2]), [1.0, 0.0, 0.0, 0.0], atol=1e-15)
    assert_allclose(truncate_eigenvalues([0.6, 0.5, 0.0, -0.1]), [0.55, 0.45, 0.0, 0.0], atol=1e-15)
    assert_allclose(truncate_eigenvalues([0.4, 0.3, 0.2, 0.1]), [0.4, 0.3, 0.2, 0.1])


def test_project_psd():
    rho = project_psd(np.diag([0.6, 0.5, 0.0, -0.1]).astype(complex))
    assert_allclose(rho, np.diag([0.55, 0.45, 0.0, 0.0]), atol=1e-12)
    assert_allclose(project_psd(BELL), BELL, atol=1e-12)
    with pytest.raises(ValueError):
        project_psd(np.array([[0.5, 1.0], [0.0, 0.5]], dtype=complex))
    with pytest.raises(ValueError):
        project_psd(np.diag([0.7, 0.7]).astype(complex))


def test_noisy_estimate_is_projected():
    # near-pure states give raw estimates with negative eigenvalues at low shots
    result = reconstruct(sample_record(BELL, 100, seed=3))
    assert np.min(np.linalg.eigvalsh(result.rho_phys)) > -1e-12
    assert np.trace(result.rho_phys).real == pytest.approx(1.0)
    if result.min_raw_eigenvalue < 0:
        assert not np.allclose(result.rho_raw, result.rho_phys)
    assert result.state(use_raw=True) is result.rho_raw


def test_record_validation():
    counts = {label: CountTable(1, 0, 0, 0) for label in SETTING_LABELS}
    TomographyRecord(0.0, counts)
    partial = dict(counts)
    del partial["ZZ"]
    with pytest.raises(ValueError):
        TomographyRecord(0.0, partial)
    with pytest.raises(ValueError):
        TomographyRecord(0.0, {**counts, "XI": CountTable(1, 0, 0, 0)})
    with pytest.raises(ValueError):
        TomographyRecord(0.0, {**counts, "XX": CountTable(0, 0, 0, 0)})


def test_pauli_vector_validation():
    c = np.zeros((4, 4))
    with pytest.raises(ValueError):
        PauliVector(c)
    c[0, 0] = 1.0
    c[1, 1] = 1.5
    with pytest.raises(ValueError):
        PauliVector(c)


def test_counts_csv_round_trip(tmp_path):
    records = [sample_record(BELL, 100, seed=s, delay_s=d) for s, d in ((1, 0.0), (2, 2e-6))]
    path = tmp_path / "counts.csv"
    records_to_frame(records).to_csv(path, index=False)
    loaded = records_from_csv(path)
    assert [r.delay_s for r in loaded] == [0.0, 2e-6]
    assert loaded[1].counts == records[1].counts


def test_counts_table_rejects_inconsistent_shots():
    df = records_to_frame([expected_record(BELL, 100)])
    df.loc[0, "shots"] = 99
    with pytest.raises(ValueError):
        records_from_frame(df)
    with pytest.raises(ValueError):
        records_from_frame(pd.DataFrame({"delay_s": [0.0]}))


def test_reduced_states():
    rho0, rho1 = reduced_states(projector(ket("01")))
    assert_allclose(rho0, np.diag([1, 0]), atol=1e-12)
    assert_allclose(rho1, np.diag([0, 1]), atol=1e-12)

    rho0, rho1 = reduced_states(BELL)
    assert_allclose(rho0, np.eye(2) / 2, atol=1e-12)
    assert_allclose(rho1, np.eye(2) / 2, atol=1e-12)
