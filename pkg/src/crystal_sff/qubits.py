"""Small dense gate toolkit.

Convention: qubit ``j`` is bit ``j`` of the computational-basis index
(qubit 0 least significant). A k-qubit gate acting on ``qubits`` uses local
index ``sum_i b[qubits[i]] * 2**i``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

X = np.array([[0, 1], [1, 0]], dtype=complex)


def apply_gate(ops: np.ndarray, gate: np.ndarray, qubits: Sequence[int], n_qubits: int) -> np.ndarray:
    """Left-multiply ``ops`` (shape ``(2**n_qubits, K)``) by ``gate`` embedded on ``qubits``."""
    k = len(qubits)
    if gate.shape != (2**k, 2**k):
        raise ValueError(f"gate shape {gate.shape} does not match {k} qubits")
    if len(set(qubits)) != k or not all(0 <= q < n_qubits for q in qubits):
        raise ValueError(f"bad qubit list {qubits} for {n_qubits} qubits")
    K = ops.shape[1]
    T = ops.reshape((2,) * n_qubits + (K,))
    axes = [n_qubits - 1 - q for q in reversed(qubits)]
    G = gate.reshape((2,) * (2 * k))
    out = np.tensordot(G, T, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return out.reshape(2**n_qubits, K)


def circuit_unitary(gates, n_qubits: int) -> np.ndarray:
    """Unitary of a gate list applied left to right in time (first gate acts first)."""
    U = np.eye(2**n_qubits, dtype=complex)
    for gate, qubits in gates:
        U = apply_gate(U, gate, qubits, n_qubits)
    return U


def controlled(gate: np.ndarray, n_controls: int, control_value: int | None = None) -> np.ndarray:
    """Gate on ``(target, c_0, ..., c_{n-1})``: apply ``gate`` to the target iff controls read
    ``control_value`` (default all ones), with c_i the i-th bit of ``control_value``.

    Local ordering puts the single target qubit first (least significant).
    """
    if control_value is None:
        control_value = 2**n_controls - 1
    dim = 2 ** (n_controls + 1)
    U = np.eye(dim, dtype=complex)
    base = 2 * control_value
    U[base:base + 2, base:base + 2] = gate
    return U
