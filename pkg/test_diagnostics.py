#!/usr/bin/env python3
"""
Entanglement and coherence diagnostics tests, including the end-to-end
decay checks on the shipped presets.
"""

import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from services.diagnostics import (CLASSICAL_BOUND, TSIRELSON_BOUND, chsh_combos, chsh_scan,
                                  chsh_scan_from_correlations, correlation_matrix, diagnose,
                                  fit_coherence_decay, ppt_min_eigenvalue, ppt_noise_floor, purity_suite)
from services.harness import ExperimentConfig, run_experiment
from services.presets import load_preset
from services.pulses import rotation_unitary
from services.qcore import SIGMA_I, ket, projector

BELL = projector((ket("00") + ket("11")) / math.sqrt(2))
MIXED = np.eye(4, dtype=complex) / 4


def werner(p):
    return p * BELL + (1 - p) * MIXED


def random_qubit(rng):
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return projector(v / np.linalg.norm(v))


def preset_run(name, **overrides):
    doc = load_preset(name)
    doc.update({"exact": True, **overrides})
    return run_experiment(ExperimentConfig.from_dict(doc), write=False)


def test_bell_state_ppt():
    assert ppt_min_eigenvalue(BELL) == pytest.approx(-0.5, abs=1e-12)
    assert ppt_min_eigenvalue(BELL, 0) == pytest.approx(ppt_min_eigenvalue(BELL, 1), abs=1e-10)


def test_werner_ppt_formula():
    for p in np.linspace(0, 1, 21):
        assert ppt_min_eigenvalue(werner(p)) == pytest.approx((1 - 3 * p) / 4, abs=1e-9)


def test_separable_mixtures_are_ppt():
    rng = np.random.default_rng(12)
    for _ in range(100):
        weights = rng.dirichlet(np.ones(3))
        rho = sum(w * np.kron(random_qubit(rng), random_qubit(rng)) for w in weights)
        assert ppt_min_eigenvalue(rho) >= -1e-9


def test_chsh_combos():
    combos = chsh_combos()
    assert len(combos) == 36
    assert all(a != a2 and b != b2 for a, a2, b, b2 in combos)


def test_chsh_of_bell_states():
    scan = chsh_scan(BELL)
    assert scan.max_abs_s == pytest.approx(CLASSICAL_BOUND, abs=1e-12)
    rotated_u = np.kron(SIGMA_I, rotation_unitary(math.pi / 4, math.pi / 2))
    rotated = rotated_u @ BELL @ rotated_u.conj().T
    scan = chsh_scan(rotated)
    assert scan.max_abs_s == pytest.approx(TSIRELSON_BOUND, abs=1e-12)
    assert scan.violates
    assert len(scan.argmax_combo) == 4
    assert 1 <= scan.argmax_index <= 36
    assert scan.as_dict()[scan.argmax_combo] == pytest.approx(scan.s_values[scan.argmax_index - 1])


def test_chsh_of_mixed_state_is_zero():
    assert chsh_scan(MIXED).max_abs_s == pytest.approx(0.0, abs=1e-15)


def test_chsh_from_correlation_mapping():
    t = correlation_matrix(BELL)
    mapping = {a + b: t[i, j] for i, a in enumerate("XYZ") for j, b in enumerate("XYZ")}
    assert chsh_scan_from_correlations(mapping).max_abs_s == pytest.approx(2.0)
    with pytest.raises(ValueError):
        chsh_scan_from_correlations(np.zeros((2, 2)))


def test_purity_suite_of_product_states():
    rng = np.random.default_rng(1)
    states = [np.kron(random_qubit(rng), 0.7 * random_qubit(rng) + 0.15 * SIGMA_I) for _ in range(5)]
    series = purity_suite(states, times=np.arange(5) * 1e-6)
    assert len(series) == 5
    assert np.max(np.abs(series.deviation)) < 1e-10
    bell = purity_suite([BELL])
    assert bell.p01[0] == pytest.approx(1.0)
    assert bell.p0[0] == pytest.approx(0.5)


def test_noise_floor_shrinks_with_shots():
    low = ppt_noise_floor(werner(0.5), 100)
    high = ppt_noise_floor(werner(0.5), 10_000)
    assert low == pytest.approx(10 * high, rel=1e-9)
    with pytest.raises(ValueError):
        ppt_noise_floor(BELL, 0)


def test_diagnose_row():
    row = diagnose(werner(0.5), 2e-6, shots=4000)
    assert row.ppt_min == pytest.approx(-0.125)
    assert row.entangled
    assert row.p0p1 == pytest.approx(row.p0 * row.p1)
    record = row.to_record()
    assert list(record) == ["delay_s", "P0", "P1", "P01", "P0P1", "ppt_min", "chsh_max", "chsh_argmax"]
    assert diagnose(werner(0.2)).entangled is False
    assert row.summary()["violates_chsh"] is False


def test_exponential_decay_recovery():
    t = np.linspace(0, 300e-6, 31)
    fit = fit_coherence_decay(t, 0.5 + 0.5 * np.exp(-t / 109.40e-6), "exponential")
    assert fit.t2_s == pytest.approx(109.40e-6, rel=1e-4)
    assert fit.model == "exponential"


def test_oscillating_decay_recovery():
    t = np.linspace(0, 60e-6, 121)
    f = 200e3
    signal = np.exp(-t / 19.1e-6) * np.cos(2 * math.pi * f * t)
    fit = fit_coherence_decay(t, signal, "auto")
    assert fit.model == "exp_cos"
    assert fit.t2_s == pytest.approx(19.1e-6, rel=0.05)
    assert fit.oscillation_freq_hz == pytest.approx(f, rel=0.02)


def test_flat_trace_is_non_decaying():
    t = np.linspace(0, 10e-6, 12)
    fit = fit_coherence_decay(t, np.ones_like(t), "exponential")
    assert fit.non_decaying
    assert fit.t2_s == pytest.approx(10 * 10e-6)


def test_coherence_fit_arguments():
    t = np.linspace(0, 1e-6, 5)
    with pytest.raises(ValueError):
        fit_coherence_decay(t, np.exp(-t), "exponential")
    with pytest.raises(ValueError):
        fit_coherence_decay(np.linspace(0, 1, 10), np.ones(10), "gaussian")


def test_natural_echo_recovers_configured_t2():
    run = preset_run("nuclear-natural", coherence_model="exponential")
    assert run.coherence.t2_s == pytest.approx(109.40e-6, rel=0.05)


def test_spectator_decay_shortens_t2():
    natural = preset_run("nuclear-natural", coherence_model="exponential")
    coupled = preset_run("nuclear-sdid", coherence_model="exponential")
    assert coupled.coherence.t2_s < natural.coherence.t2_s


def test_exchange_oscillation_frequency():
    doc = load_preset("nvnv-exchange")
    a_ex_khz = doc["system"]["couplings"][0]["a_ex_khz"]
    run = preset_run("nvnv-exchange", coherence_model="exp_cos")
    assert run.coherence.oscillation_freq_hz == pytest.approx(2 * a_ex_khz * 1e3, rel=0.02)
    assert min(r.ppt_min for r in run.rows) < -0.1
