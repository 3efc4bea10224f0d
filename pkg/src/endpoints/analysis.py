from flask import Blueprint, request, jsonify
from services.diagnostics import chsh_scan, diagnose
from services.measurement import CountTable
from services.qcore import to_pairs
from services.tomography import SETTING_LABELS, TomographyRecord, reconstruct
from utils.validators import (validate_density_matrix_payload, validate_counts_payload, validate_batch,
                              validate_shots, missing_fields)
import logging

logger = logging.getLogger(__name__)

analysis_bp = Blueprint('analysis', __name__)


def _json_body():
    if not request.is_json:
        return None, (jsonify({'error': 'Content-Type must be application/json'}), 400)
    data = request.get_json(silent=True)
    if not isinstance(data, dict):
        return None, (jsonify({'error': 'Request body must be a JSON object'}), 400)
    return data, None


def _diagnostics_payload(rho, shots=None):
    row = diagnose(rho, 0.0, shots)
    scan = chsh_scan(rho)
    return {
        'purity_0': float(row.p0),
        'purity_1': float(row.p1),
        'purity_01': float(row.p01),
        'p0p1': float(row.p0p1),
        'ppt_min': float(row.ppt_min),
        'noise_floor': float(row.noise_floor),
        'entangled': bool(row.entangled),
        'chsh_max': float(row.chsh_max),
        'chsh_argmax': row.chsh_argmax,
        'chsh_violation': bool(scan.violates),
    }


@analysis_bp.route('/diagnose', methods=['POST'])
def diagnose_state():
    """
    Entanglement and purity diagnostics for one two-qubit density matrix

    Request body:
    {
        "rho": [[[re, im], ...], ...],  (4x4, qubit 0 is the left factor)
        "shots": optional int, shots per setting used for the PPT noise floor
    }

    Response:
    {
        "purity_0": float, "purity_1": float, "purity_01": float, "p0p1": float,
        "ppt_min": float, "noise_floor": float, "entangled": boolean,
        "chsh_max": float, "chsh_argmax": "XZXZ" (A A' B B'), "chsh_violation": boolean
    }
    """
    try:
        data, error = _json_body()
        if error:
            return error

        if missing_fields(data, ['rho']):
            return jsonify({'error': 'Missing required field: rho'}), 400

        validation = validate_density_matrix_payload(data['rho'])
        if not validation['valid']:
            return jsonify({'error': validation['error']}), 400

        if not validate_shots(data.get('shots')):
            return jsonify({'error': 'shots must be a positive integer'}), 400

        result = _diagnostics_payload(validation['rho'], data.get('shots'))
        logger.info(f"Diagnosed state - ppt_min: {result['ppt_min']:.4f}, chsh_max: {result['chsh_max']:.4f}")
        return jsonify(result), 200

    except Exception as e:
        logger.error(f"Error diagnosing state: {str(e)}")
        return jsonify({
            'error': 'Internal server error',
            'message': 'Failed to diagnose density matrix'
        }), 500


@analysis_bp.route('/tomography', methods=['POST'])
def reconstruct_state():
    """
    Reconstruct a two-qubit state from the nine Pauli-setting count tables

    Request body:
    {
        "counts": {"XX": [n00, n01, n10, n11], ..., "ZZ": [...]},
        "delay_s": optional float
    }

    Response:
    {
        "rho_raw": [[[re, im], ...]], "rho_phys": [[[re, im], ...]],
        "min_raw_eigenvalue": float, "pauli": {"II": 1.0, ...},
        "diagnostics": {...}
    }
    """
    try:
        data, error = _json_body()
        if error:
            return error

        if missing_fields(data, ['counts']):
            return jsonify({'error': 'Missing required field: counts'}), 400

        validation = validate_counts_payload(data['counts'])
        if not validation['valid']:
            return jsonify({'error': validation['error']}), 400

        delay_s = data.get('delay_s', 0.0)
        if isinstance(delay_s, bool) or not isinstance(delay_s, (int, float)) or delay_s < 0:
            return jsonify({'error': 'delay_s must be a non-negative number'}), 400

        tables = {label: CountTable.from_sequence(data['counts'][label]) for label in SETTING_LABELS}
        result = reconstruct(TomographyRecord(float(delay_s), tables))
        shots = min(t.shots for t in tables.values())

        logger.info(f"Reconstructed state from {shots} shots/setting - "
                     f"min raw eigenvalue: {result.min_raw_eigenvalue:.4f}")
        return jsonify({
            'delay_s': result.delay_s,
            'rho_raw': to_pairs(result.rho_raw),
            'rho_phys': to_pairs(result.rho_phys),
            'min_raw_eigenvalue': float(result.min_raw_eigenvalue),
            'pauli': result.pauli.as_dict(),
            'diagnostics': _diagnostics_payload(result.rho_phys, shots),
        }), 200

    except Exception as e:
        logger.error(f"Error reconstructing state: {str(e)}")
        return jsonify({
            'error': 'Internal server error',
            'message': 'Failed to reconstruct density matrix'
        }), 500


@analysis_bp.route('/batch', methods=['POST'])
def diagnose_batch():
    """
    Diagnose several density matrices at once

    Request body:
    {
        "states": [
            {"rho": [[[re, im], ...]], "id": "optional_id"},
            ...
        ]
    }
    """
    try:
        data, error = _json_body()
        if error:
            return error

        batch_validation = validate_batch(data.get('states'))
        if not batch_validation['valid']:
            return jsonify({'error': batch_validation['error']}), 400

        results = []
        for i, item in enumerate(data['states']):
            item_id = item.get('id') if isinstance(item, dict) else None
            if not isinstance(item, dict) or 'rho' not in item:
                results.append({'error': f'Missing rho for state at index {i}', 'id': item_id})
                continue

            validation = validate_density_matrix_payload(item['rho'])
            if not validation['valid']:
                results.append({'error': validation['error'], 'id': item_id})
                continue

            try:
                result = _diagnostics_payload(validation['rho'])
                result['id'] = item_id
                results.append(result)
            except Exception as e:
                logger.error(f"Error diagnosing state {i}: {str(e)}")
                results.append({'error': f'Failed to diagnose state: {str(e)}', 'id': item_id})

        return jsonify({
            'results': results,
            'total_processed': len(results)
        }), 200

    except Exception as e:
        logger.error(f"Error in batch diagnostics: {str(e)}")
        return jsonify({
            'error': 'Internal server error',
            'message': 'Failed to process batch diagnostics'
        }), 500
