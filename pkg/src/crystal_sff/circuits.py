"""Two circuit realisations of the random-walk unitary, used as equivalence checks.

``build_walk_multiplexer_unitary`` assembles ``S L S^H M`` on ``N`` qubits from a
ripple-carry increment and two multiplexers (uniformly controlled gates on qubit 0).

``build_brickwork_one_particle`` builds the two-layer brickwork of particle-number
conserving two-qubit gates on ``d`` qubits and reads off its one-particle sector.
"""

from __future__ import annotations

import math

import numpy as np

from .ensembles import VerblunskyCoefficients
from .errors import ParameterError, ResourceError
from .qubits import X, apply_gate, circuit_unitary, controlled

MAX_BRICKWORK_L = 5


def increment_gates(n_qubits: int):
    """``|x> -> |x + 1 mod 2^N>`` as multi-controlled X gates, highest qubit first."""
    gates = []
    for j in reversed(range(n_qubits)):
        # flip qubit j when all lower qubits are 1
        gates.append((controlled(X, j), (j, *range(j))))
    return gates


def multiplexer_gates(blocks: list[np.ndarray], n_qubits: int):
    """Apply ``blocks[k]`` to qubit 0 when qubits ``1..N-1`` encode ``k``."""
    controls = tuple(range(1, n_qubits))
    return [(controlled(blk, n_qubits - 1, k), (0, *controls)) for k, blk in enumerate(blocks)]


def build_walk_multiplexer_unitary(coeffs: VerblunskyCoefficients, n_qubits: int | None = None) -> np.ndarray:
    """Full ``2^N``-dimensional circuit unitary.

    Blocks ``Theta_k`` with ``k >= d`` are identity padding, so the first ``d``
    basis states span an invariant subspace on which the circuit equals the
    walk unitary.
    """
    d = coeffs.d
    if n_qubits is None:
        n_qubits = max(1, math.ceil(math.log2(d)))
    if 2**n_qubits < d:
        raise ParameterError(f"{n_qubits} qubits cannot hold d = {d} states")
    if n_qubits < 2:
        raise ParameterError("the multiplexer circuit needs at least 2 qubits")
    th = coeffs.blocks()
    eye = np.eye(2, dtype=complex)
    padded = [th[k] if k < d else eye for k in range(2**n_qubits)]
    M_gates = multiplexer_gates(padded[0::2], n_qubits)
    L_gates = multiplexer_gates(padded[1::2], n_qubits)
    inc = increment_gates(n_qubits)
    # S^H = inverse increment: the same multi-controlled X gates in reverse order
    dec = list(reversed(inc))
    # time order: M, then S^H, L, S
    return circuit_unitary(M_gates + dec + L_gates + inc, n_qubits)


def number_conserving_gate(theta: np.ndarray) -> np.ndarray:
    """``CNOT(n->m) . Theta(m->n) . CNOT(n->m)`` on qubits ``(m, n)``.

    Local index ``2 b_m + b_n``; the result acts as identity on ``|00>`` and
    ``|11>`` and as ``theta`` on (particle at m, particle at n).
    """
    # ordering (m, n) with m most significant
    cnot_n_to_m = np.eye(4, dtype=complex)[:, [0, 3, 2, 1]]
    ctrl_theta = np.eye(4, dtype=complex)
    ctrl_theta[2:, 2:] = theta
    return cnot_n_to_m @ ctrl_theta @ cnot_n_to_m


def brickwork_circuit(coeffs: VerblunskyCoefficients) -> np.ndarray:
    """Full ``2^d`` brickwork unitary on ``d = 2l`` qubits (qubit ``d`` identified with 0)."""
    d = coeffs.d
    l = d // 2
    if l > MAX_BRICKWORK_L:
        raise ResourceError(f"brickwork needs 2^{d} states; l = {l} exceeds {MAX_BRICKWORK_L}")
    th = coeffs.blocks()
    gates = []
    for parity in (0, 1):
        for k in range(l):
            m = 2 * k + parity
            n = (m + 1) % d
            # apply_gate wants least-significant local qubit first: local index 2 b_m + b_n
            gates.append((number_conserving_gate(th[m]), (n, m)))
    return circuit_unitary(gates, d)


def one_particle_sector(U: np.ndarray, n_qubits: int) -> np.ndarray:
    """Restriction to states with a single excited qubit; row/column ``j`` is ``|1 at qubit j>``."""
    idx = 1 << np.arange(n_qubits)
    return U[np.ix_(idx, idx)]


def build_brickwork_one_particle(coeffs: VerblunskyCoefficients) -> np.ndarray:
    U = brickwork_circuit(coeffs)
    return one_particle_sector(U, coeffs.d)


def particle_number(n_qubits: int) -> np.ndarray:
    """Diagonal of ``Q = sum_k b_k`` in the computational basis."""
    x = np.arange(2**n_qubits)
    return np.array([bin(v).count("1") for v in x])
