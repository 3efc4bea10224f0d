"""
Dense linear algebra and quantum-information primitives for 1-3 qubit registers.

Operators are plain complex ``numpy`` arrays of shape (2**n, 2**n). Qubit 0 is
the left Kronecker factor everywhere, so |01> means qubit 0 in |0> and qubit 1
in |1>.
"""

import logging
from enum import Enum
from typing import List, Tuple

import numpy as np

from services.exceptions import DimensionError

logger = logging.getLogger(__name__)

MAX_QUBITS = 3
STATE_TOL = 1e-9

SIGMA_I = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# |0><1|, lowers |1> to |0>
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)


class PauliLabel(str, Enum):
    I = "I"
    X = "X"
    Y = "Y"
    Z = "Z"

    @property
    def matrix(self) -> np.ndarray:
        return _PAULI_MATRICES[self]


_PAULI_MATRICES = {
    PauliLabel.I: SIGMA_I,
    PauliLabel.X: SIGMA_X,
    PauliLabel.Y: SIGMA_Y,
    PauliLabel.Z: SIGMA_Z,
}

PAULI_ORDER = (PauliLabel.I, PauliLabel.X, PauliLabel.Y, PauliLabel.Z)


def num_qubits(op: np.ndarray) -> int:
    """Number of qubits an operator acts on; raises for malformed shapes."""
    op = np.asarray(op)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise DimensionError(f"Operator must be square, got shape {op.shape}")
    dim = op.shape[0]
    n = dim.bit_length() - 1
    if dim < 2 or 2 ** n != dim:
        raise DimensionError(f"Operator dimension {dim} is not a power of two")
    if n > MAX_QUBITS:
        raise DimensionError(f"Registers are capped at {MAX_QUBITS} qubits, got {n}")
    return n


def as_operator(entries) -> np.ndarray:
    op = np.array(entries, dtype=complex)
    num_qubits(op)
    return op


def dagger(op: np.ndarray) -> np.ndarray:
    return op.conj().T


def is_hermitian(op: np.ndarray, tol: float = STATE_TOL) -> bool:
    return bool(np.max(np.abs(op - dagger(op))) <= tol)


def symmetrize(op: np.ndarray) -> np.ndarray:
    """Return (op + op^dagger) / 2."""
    return 0.5 * (op + dagger(op))


def validate_density_matrix(rho: np.ndarray, tol: float = STATE_TOL) -> np.ndarray:
    """
    Check the density-matrix invariants and return a symmetrized copy.

    Args:
        rho: Candidate state
        tol: Tolerance on hermiticity, unit trace and negative eigenvalues

    Returns:
        The symmetrized state as a new array
    """
    rho = as_operator(rho)
    if not is_hermitian(rho, tol):
        raise ValueError("Density matrix is not Hermitian")
    rho = symmetrize(rho)
    trace = np.real(np.trace(rho))
    if abs(trace - 1.0) > tol:
        raise ValueError(f"Density matrix trace is {trace:.12g}, expected 1")
    min_eig = np.min(np.linalg.eigvalsh(rho))
    if min_eig < -tol:
        raise ValueError(f"Density matrix has negative eigenvalue {min_eig:.3e}")
    return rho


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with ``a`` as the left factor (lower qubit indices)."""
    a = as_operator(a)
    b = as_operator(b)
    if num_qubits(a) + num_qubits(b) > MAX_QUBITS:
        raise DimensionError(f"Tensor product exceeds {MAX_QUBITS} qubits")
    return np.kron(a, b)


def tensor_all(ops) -> np.ndarray:
    result = np.eye(1, dtype=complex)
    for op in ops:
        result = np.kron(result, op)
    return result


def embed(op: np.ndarray, target: int, n_qubits: int) -> np.ndarray:
    """Lift a single-qubit operator onto ``target`` of an ``n_qubits`` register."""
    if not 0 <= target < n_qubits:
        raise DimensionError(f"Qubit index {target} outside register of {n_qubits}")
    factors = [SIGMA_I] * n_qubits
    factors[target] = op
    return tensor_all(factors)


def pauli_string(labels) -> np.ndarray:
    """Operator for a sequence of Pauli labels, e.g. ``("X", "Z")`` -> X (x) Z."""
    return tensor_all([PauliLabel(label).matrix for label in labels])


def ket(bits: str) -> np.ndarray:
    """Computational basis ket from a bit string such as ``"01"``."""
    vec = np.zeros(2 ** len(bits), dtype=complex)
    vec[int(bits, 2)] = 1.0
    return vec


def projector(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec, dtype=complex)
    vec = vec / np.linalg.norm(vec)
    return np.outer(vec, vec.conj())


def _check_two_qubit(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if num_qubits(rho) != 2:
        raise DimensionError("Operation defined for two-qubit states only")
    return rho


def _check_index(index: int) -> None:
    if index not in (0, 1):
        raise ValueError(f"Invalid qubit index {index}; expected 0 or 1")


def partial_trace(rho: np.ndarray, keep: int) -> np.ndarray:
    """Reduced 2x2 state of qubit ``keep`` from a two-qubit state."""
    _check_index(keep)
    r = _check_two_qubit(rho).reshape(2, 2, 2, 2)
    # r[i, j, k, l] = <i j| rho |k l>
    if keep == 0:
        return np.einsum("ijkj->ik", r)
    return np.einsum("ijil->jl", r)


def partial_transpose(rho: np.ndarray, subsystem: int) -> np.ndarray:
    """Partial transpose of a two-qubit operator on ``subsystem``."""
    _check_index(subsystem)
    r = _check_two_qubit(rho).reshape(2, 2, 2, 2)
    if subsystem == 0:
        r = r.transpose(2, 1, 0, 3)
    else:
        r = r.transpose(0, 3, 2, 1)
    return r.reshape(4, 4)


def eig_hermitian(m: np.ndarray, tol: float = STATE_TOL) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigen-decomposition of a Hermitian operator.

    Returns:
        (eigenvalues sorted descending, eigenvector matrix with matching columns)
    """
    m = as_operator(m)
    if not is_hermitian(m, tol):
        raise ValueError("eig_hermitian requires a Hermitian operator")
    values, vectors = np.linalg.eigh(symmetrize(m))
    return values[::-1].copy(), vectors[:, ::-1].copy()


def purity(rho: np.ndarray) -> float:
    """Tr(rho^2)."""
    rho = as_operator(rho)
    return float(np.real(np.trace(rho @ rho)))


def expectation(rho: np.ndarray, observable: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ observable)))


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """(1/2) ||a - b||_1 for Hermitian operands."""
    diff = symmetrize(np.asarray(a, dtype=complex) - np.asarray(b, dtype=complex))
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))


def to_pairs(op: np.ndarray) -> List[List[List[float]]]:
    """Nested row-major [[re, im], ...] representation used in JSON exports."""
    op = np.asarray(op, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in op]


def from_pairs(pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise DimensionError("Expected a nested array of [re, im] pairs")
    return as_operator(arr[..., 0] + 1j * arr[..., 1])
