from typing import Any, Dict, List

import numpy as np

from services.qcore import validate_density_matrix

MAX_BATCH_SIZE = 100
SETTING_LABELS = tuple(a + b for a in "XYZ" for b in "XYZ")
_HERMITIAN_TOL = 1e-8
_TRACE_TOL = 1e-6


def _invalid(message: str) -> Dict[str, Any]:
    return {'valid': False, 'error': message}


def _ok(**extra) -> Dict[str, Any]:
    result = {'valid': True, 'error': None}
    result.update(extra)
    return result


def parse_complex_matrix(payload: Any) -> np.ndarray:
    """
    Parse a nested [[re, im], ...] matrix

    Args:
        payload: d x d list of [re, im] pairs

    Returns:
        Complex numpy array

    Raises:
        ValueError: if the payload is not a square matrix of numeric pairs
    """
    if not isinstance(payload, list) or not payload:
        raise ValueError('Matrix must be a non-empty array of rows')
    d = len(payload)
    rows = []
    for i, row in enumerate(payload):
        if not isinstance(row, list) or len(row) != d:
            raise ValueError(f'Row {i} must contain {d} entries')
        values = []
        for j, entry in enumerate(row):
            if (not isinstance(entry, list) or len(entry) != 2
                    or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in entry)):
                raise ValueError(f'Entry [{i}][{j}] must be a [re, im] pair of numbers')
            values.append(complex(entry[0], entry[1]))
        rows.append(values)
    return np.array(rows, dtype=complex)


def validate_density_matrix_payload(payload: Any) -> Dict[str, Any]:
    """
    Validate a two-qubit density matrix sent as [[re, im], ...] pairs

    Args:
        payload: The 'rho' field of a request body

    Returns:
        Dict with 'valid' boolean, 'error' message if invalid and the parsed
        matrix under 'rho' if valid
    """
    if payload is None:
        return _invalid('rho cannot be None')
    try:
        rho = parse_complex_matrix(payload)
    except ValueError as e:
        return _invalid(str(e))
    if rho.shape != (4, 4):
        return _invalid(f'rho must be 4x4, got {rho.shape[0]}x{rho.shape[1]}')
    if not np.all(np.isfinite(rho)):
        return _invalid('rho contains non-finite values')
    if np.max(np.abs(rho - rho.conj().T)) > _HERMITIAN_TOL:
        return _invalid('rho must be Hermitian')
    if abs(np.trace(rho).real - 1.0) > _TRACE_TOL:
        return _invalid('rho must have unit trace')
    try:
        rho = validate_density_matrix(rho, _TRACE_TOL)
    except ValueError as e:
        return _invalid(f'rho must be positive semidefinite: {e}')
    return _ok(rho=rho)


def validate_counts_payload(payload: Any) -> Dict[str, Any]:
    """
    Validate a tomography counts table

    Args:
        payload: Mapping from each of the 9 setting labels (XX ... ZZ) to
            [n00, n01, n10, n11]

    Returns:
        Dict with 'valid' boolean and 'error' message if invalid
    """
    if not isinstance(payload, dict):
        return _invalid('counts must be an object keyed by setting label')
    missing = [label for label in SETTING_LABELS if label not in payload]
    if missing:
        return _invalid(f'Missing settings: {", ".join(missing)}')
    unknown = sorted(set(payload) - set(SETTING_LABELS))
    if unknown:
        return _invalid(f'Unknown settings: {", ".join(unknown)}')
    for label in SETTING_LABELS:
        counts = payload[label]
        if (not isinstance(counts, list) or len(counts) != 4
                or any(isinstance(n, bool) or not isinstance(n, int) or n < 0 for n in counts)):
            return _invalid(f'counts[{label}] must be four non-negative integers')
        if sum(counts) == 0:
            return _invalid(f'counts[{label}] has zero shots')
    return _ok()


def validate_batch(items: Any) -> Dict[str, Any]:
    """
    Validate the envelope of a batch request

    Args:
        items: The 'states' field of a batch request body

    Returns:
        Dict with 'valid' boolean and 'error' message if invalid
    """
    if not isinstance(items, list):
        return _invalid('Missing or invalid field: states (must be an array)')
    if len(items) == 0:
        return _invalid('States array cannot be empty')
    if len(items) > MAX_BATCH_SIZE:
        return _invalid(f'Batch size cannot exceed {MAX_BATCH_SIZE} states')
    return _ok()


def validate_shots(shots: Any) -> bool:
    """
    Validate an optional shots-per-setting value

    Args:
        shots: The shots value to validate

    Returns:
        True if valid, False otherwise
    """
    if shots is None:
        return True  # Optional field
    return isinstance(shots, int) and not isinstance(shots, bool) and shots > 0


def missing_fields(data: Dict[str, Any], required: List[str]) -> List[str]:
    return [name for name in required if name not in data]
