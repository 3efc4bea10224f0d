#!/usr/bin/env python3
"""
API Endpoint Tests
==================

Exercises the analysis API through Flask's test client: health and info
routes, density-matrix diagnostics, tomography from counts and batch requests.
"""

import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from app import app
from services.measurement import counts_as_dict
from services.qcore import from_pairs, ket, projector, to_pairs
from services.tomography import expected_record

BELL = projector((ket("00") + ket("11")) / math.sqrt(2))
PRODUCT = projector(ket("01"))


@pytest.fixture
def client():
    app.config['TESTING'] = True
    with app.test_client() as client:
        yield client


def counts_payload(rho, shots=1000):
    record = expected_record(rho, shots)
    return {label: list(counts_as_dict(c).values()) for label, c in record.counts.items()}


def test_health_endpoint(client):
    response = client.get('/health')
    assert response.status_code == 200
    data = response.get_json()
    assert data['status'] == 'healthy'
    assert data['service'] == 'nv-pulse-simulator'


def test_root_lists_endpoints(client):
    data = client.get('/').get_json()
    assert any('/api/analysis/diagnose' in e for e in data['endpoints'])


def test_simulator_info(client):
    data = client.get('/api/simulator/info').get_json()
    assert 'nvnv-exchange' in data['presets']
    assert 'rho-v1' in data['schemas']
    assert 'coherence-fit-v1' in data['schemas']
    assert data['default_shots'] > 0


def test_diagnose_bell_state(client):
    response = client.post('/api/analysis/diagnose', json={'rho': to_pairs(BELL)})
    assert response.status_code == 200
    data = response.get_json()
    assert data['ppt_min'] == pytest.approx(-0.5)
    assert data['entangled'] is True
    assert data['purity_01'] == pytest.approx(1.0)
    assert data['purity_0'] == pytest.approx(0.5)
    assert data['chsh_max'] == pytest.approx(2.0)


def test_diagnose_with_shots_sets_noise_floor(client):
    response = client.post('/api/analysis/diagnose', json={'rho': to_pairs(BELL), 'shots': 1000})
    assert response.get_json()['noise_floor'] > 0
    response = client.post('/api/analysis/diagnose', json={'rho': to_pairs(BELL), 'shots': 0})
    assert response.status_code == 400


def test_diagnose_product_state(client):
    data = client.post('/api/analysis/diagnose', json={'rho': to_pairs(PRODUCT)}).get_json()
    assert data['ppt_min'] == pytest.approx(0.0, abs=1e-12)
    assert data['entangled'] is False
    assert data['p0p1'] == pytest.approx(data['purity_01'])


@pytest.mark.parametrize('payload, message', [
    ({}, 'Missing required field: rho'),
    ({'rho': [[[1, 0]]]}, 'rho must be 4x4'),
    ({'rho': to_pairs(2 * BELL)}, 'unit trace'),
    ({'rho': to_pairs(np.triu(np.ones((4, 4))) / 4)}, 'Hermitian'),
    ({'rho': [[1, 2], [3, 4]]}, 'Entry [0][0]'),
    ({'rho': to_pairs(np.diag([1.2, -0.2, 0.0, 0.0]))}, 'positive semidefinite'),
])
def test_diagnose_rejects_bad_input(client, payload, message):
    response = client.post('/api/analysis/diagnose', json=payload)
    assert response.status_code == 400
    assert message in response.get_json()['error']


def test_non_json_body(client):
    response = client.post('/api/analysis/diagnose', data='rho', content_type='text/plain')
    assert response.status_code == 400


def test_tomography_from_counts(client):
    response = client.post('/api/analysis/tomography', json={'counts': counts_payload(BELL), 'delay_s': 1e-6})
    assert response.status_code == 200
    data = response.get_json()
    assert data['delay_s'] == 1e-6
    assert np.allclose(from_pairs(data['rho_phys']), BELL, atol=1e-3)
    assert data['pauli']['XX'] == pytest.approx(1.0)
    assert data['diagnostics']['entangled'] is True


def test_tomography_rejects_incomplete_counts(client):
    counts = counts_payload(BELL)
    del counts['ZZ']
    response = client.post('/api/analysis/tomography', json={'counts': counts})
    assert response.status_code == 400
    assert 'ZZ' in response.get_json()['error']

    counts = counts_payload(BELL)
    counts['XY'] = [0, 0, 0, 0]
    assert client.post('/api/analysis/tomography', json={'counts': counts}).status_code == 400

    counts = counts_payload(BELL)
    response = client.post('/api/analysis/tomography', json={'counts': counts, 'delay_s': -1})
    assert response.status_code == 400


def test_batch(client):
    response = client.post('/api/analysis/batch', json={'states': [
        {'rho': to_pairs(BELL), 'id': 'bell'},
        {'rho': to_pairs(PRODUCT), 'id': 'product'},
        {'id': 'missing'},
        {'rho': to_pairs(2 * BELL), 'id': 'bad'},
    ]})
    assert response.status_code == 200
    data = response.get_json()
    assert data['total_processed'] == 4
    results = {r['id']: r for r in data['results']}
    assert results['bell']['entangled'] is True
    assert results['product']['entangled'] is False
    assert 'error' in results['missing']
    assert 'unit trace' in results['bad']['error']


def test_batch_envelope_validation(client):
    assert client.post('/api/analysis/batch', json={'states': []}).status_code == 400
    assert client.post('/api/analysis/batch', json={}).status_code == 400
    too_many = {'states': [{'rho': to_pairs(BELL)}] * 101}
    assert client.post('/api/analysis/batch', json=too_many).status_code == 400
