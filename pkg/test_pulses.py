#!/usr/bin/env python3
"""
Pulse envelope, rotation angle and named-schedule tests.
"""

import math
import os
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from services.pulses import (DEFAULT_PI_AMPLITUDE, GaussianPulse, IdealRotation, Idle, PulseSchedule,
                             ScheduledItem, SequenceKind, SequenceName, build_sequence, envelope_value,
                             idle_schedule, pulse_theta, rabi_rate_for_pi_amplitude,
                             rotation_unitary, single_pulse_schedule)
from services.qcore import SIGMA_X, ket

TAU = 1e-6
PULSE_S = 60e-9


def test_envelope_truncated_at_three_sigma():
    p = GaussianPulse(amplitude=0.1, center_s=50e-9)
    assert p.duration_s == pytest.approx(PULSE_S)
    assert envelope_value(p, 50e-9) == pytest.approx(0.1)
    assert envelope_value(p, 50e-9 + 10e-9) == pytest.approx(0.1 * math.exp(-0.5))
    assert envelope_value(p, 50e-9 + 31e-9) == 0.0


def test_pulse_validation():
    with pytest.raises(ValueError):
        GaussianPulse(amplitude=0.1, center_s=0.0, sigma_s=0.0)
    with pytest.raises(ValueError):
        GaussianPulse(amplitude=-0.1, center_s=0.0)
    with pytest.raises(ValueError):
        IdealRotation(theta=2 * math.pi)
    with pytest.raises(ValueError):
        Idle(-1e-9)
    assert Idle(0.0).duration_s == 0.0


def test_analytic_area_matches_quadrature():
    p = GaussianPulse(amplitude=1.0, center_s=0.0)
    t = np.linspace(p.start_s, p.end_s, 20001)
    area = np.trapz([envelope_value(p, ti) for ti in t], t)
    assert area == pytest.approx(p.unit_area_s(), rel=1e-6)


def test_pi_amplitude_gives_pi_and_half_gives_half_pi():
    rate = rabi_rate_for_pi_amplitude(DEFAULT_PI_AMPLITUDE)
    pi_pulse = GaussianPulse(amplitude=DEFAULT_PI_AMPLITUDE, center_s=0.0)
    half_pulse = GaussianPulse(amplitude=DEFAULT_PI_AMPLITUDE / 2, center_s=0.0)
    assert pulse_theta(pi_pulse, rate) == pytest.approx(math.pi)
    assert pulse_theta(half_pulse, rate) == pytest.approx(math.pi / 2)
    with pytest.raises(ValueError):
        pulse_theta(pi_pulse, 0.0)


def test_rotation_unitary():
    assert_allclose(rotation_unitary(math.pi, 0.0), -1j * SIGMA_X, atol=1e-15)
    # pi/2 about -Y takes |0> to |->
    minus = (ket("0") - ket("1")) / math.sqrt(2)
    assert_allclose(rotation_unitary(math.pi / 2, -math.pi / 2) @ ket("0"), minus, atol=1e-12)
    u = rotation_unitary(1.234, 0.7)
    assert_allclose(u @ u.conj().T, np.eye(2), atol=1e-12)


def test_schedule_rejects_overlap():
    p = GaussianPulse(amplitude=0.1, center_s=30e-9)
    q = GaussianPulse(amplitude=0.1, center_s=50e-9)
    schedule = PulseSchedule(1, (ScheduledItem(0, p.start_s, p), ScheduledItem(0, q.start_s, q)), 200e-9)
    with pytest.raises(ValueError):
        schedule.validate()


def test_sequence_kind():
    assert SequenceKind("ramsey", TAU).free_evolution_time() == TAU
    assert SequenceKind(SequenceName.HAHN_ECHO, TAU).free_evolution_time() == 2 * TAU
    assert SequenceKind(SequenceName.NVNV_IMPURITY, TAU).n_qubits == 2
    with pytest.raises(ValueError):
        SequenceKind(SequenceName.RAMSEY, -1.0)
    with pytest.raises(ValueError):
        SequenceKind("cpmg", TAU)


def test_ramsey_schedule():
    schedule = build_sequence(SequenceKind(SequenceName.RAMSEY, TAU))
    assert schedule.n_qubits == 1
    assert schedule.total_duration_s == pytest.approx(2 * PULSE_S + TAU)
    amplitudes = [p.amplitude for _, p in schedule.gaussian_pulses()]
    assert amplitudes == [DEFAULT_PI_AMPLITUDE / 2, DEFAULT_PI_AMPLITUDE / 2]


def test_hahn_echo_refocusing_pulse_is_phase_shifted():
    schedule = build_sequence(SequenceKind(SequenceName.HAHN_ECHO, TAU))
    pulses = [p for _, p in sorted(schedule.gaussian_pulses(), key=lambda qp: qp[1].center_s)]
    assert [p.amplitude for p in pulses] == [DEFAULT_PI_AMPLITUDE / 2, DEFAULT_PI_AMPLITUDE,
                                             DEFAULT_PI_AMPLITUDE / 2]
    assert [p.phase for p in pulses] == pytest.approx([0.0, math.pi / 2, 0.0])
    assert schedule.total_duration_s == pytest.approx(3 * PULSE_S + 2 * TAU)
    # symmetric free periods around the pi pulse
    gap1 = pulses[1].start_s - pulses[0].end_s
    gap2 = pulses[2].start_s - pulses[1].end_s
    assert gap1 == pytest.approx(TAU)
    assert gap2 == pytest.approx(TAU)


def test_nuclear_impurity_schedule():
    schedule = build_sequence(SequenceKind(SequenceName.NUCLEAR_IMPURITY, TAU))
    assert schedule.n_qubits == 2
    impurity = [p for q, p in schedule.gaussian_pulses() if q == 1]
    assert len(impurity) == 1
    assert impurity[0].amplitude == DEFAULT_PI_AMPLITUDE
    assert impurity[0].start_s == pytest.approx(0.0)
    # impurity line is padded with an idle to the full duration
    last = schedule.items_on(1)[-1]
    assert last.end_s == pytest.approx(schedule.total_duration_s)


def test_nvnv_impurity_preparation_phases():
    schedule = build_sequence(SequenceKind(SequenceName.NVNV_IMPURITY, TAU))
    first = {q: min((p for qq, p in schedule.gaussian_pulses() if qq == q), key=lambda p: p.center_s)
             for q in (0, 1)}
    assert first[0].phase == pytest.approx(math.pi / 2)
    assert first[1].phase == pytest.approx(-math.pi / 2)
    assert len(schedule.gaussian_pulses()) == 6


def test_zero_delay_is_allowed():
    schedule = build_sequence(SequenceKind(SequenceName.HAHN_ECHO, 0.0))
    assert schedule.total_duration_s == pytest.approx(3 * PULSE_S)


@pytest.mark.parametrize("name", list(SequenceName))
def test_duration_grows_with_the_free_evolution_time(name):
    kinds = [SequenceKind(name, tau) for tau in (1e-6, 2e-6, 3e-6)]
    overhead = [build_sequence(k).total_duration_s - k.free_evolution_time() for k in kinds]
    assert overhead == pytest.approx([overhead[0]] * 3, abs=1e-15)
    assert overhead[0] == pytest.approx(build_sequence(SequenceKind(name, 0.0)).total_duration_s, abs=1e-15)


def test_custom_template_amplitude_is_used():
    template = GaussianPulse(amplitude=0.2, center_s=0.0, sigma_s=5e-9)
    schedule = build_sequence(SequenceKind(SequenceName.RAMSEY, TAU), template)
    assert all(p.amplitude == pytest.approx(0.1) for _, p in schedule.gaussian_pulses())
    assert schedule.total_duration_s == pytest.approx(60e-9 + TAU)


def test_single_pulse_and_idle_schedules():
    schedule = single_pulse_schedule(0.3)
    assert schedule.gaussian_pulses()[0][1].start_s == pytest.approx(0.0)
    idle = idle_schedule(1e-6, 2, [(0.5e-6, IdealRotation(math.pi, 0.0, target=1))])
    assert len(idle.rotations()) == 1
    idle.validate()
    with pytest.raises(ValueError):
        idle_schedule(1e-6, 1, [(2e-6, IdealRotation(math.pi))])


def test_to_records():
    records = build_sequence(SequenceKind(SequenceName.RAMSEY, TAU)).to_records()
    assert [r["kind"] for r in records] == ["gaussian", "idle", "gaussian"]
    assert records[0]["params"]["amplitude"] == DEFAULT_PI_AMPLITUDE / 2
