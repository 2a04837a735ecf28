"""Builders for one sampled evolution operator ``U`` of each ensemble.

* circular beta-ensemble through the random-walk (CMV) unitary ``U = S L S^H M``;
* perturbed permutation ``U = exp(-i g H) S`` with a GUE matrix ``H``;
* random Lax matrices of the Ruijsenaars-Schneider model;
* the local staircase circuit of small permutation/GUE blocks.

Basis convention for the walk: ``|n>|-> -> 2n`` and ``|n>|+> -> 2n + 1``, so the
conditional shift is the cyclic increment ``j -> j + 1 (mod d)``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ParameterError, ResourceError, UnitarityError
from .permutations import Permutation
from .qubits import apply_gate
from .rng import sample_alpha, sample_gue, sample_permutation, uniform_phase

UNITARY_TOL = 1e-12
LAX_UNITARY_TOL = 1e-10


def unitarity_error(U: np.ndarray) -> float:
    """``max |U^H U - I|`` entrywise."""
    G = U.conj().T @ U
    G[np.diag_indices_from(G)] -= 1.0
    return float(np.abs(G).max())


def certify_unitary(U: np.ndarray, tol: float = UNITARY_TOL) -> np.ndarray:
    err = unitarity_error(U)
    if not err <= tol:
        raise UnitarityError(f"|U^H U - I|_max = {err:.3e} exceeds {tol:.0e} (d = {U.shape[0]})")
    return U


# ---------------------------------------------------------------------------
# circular beta-ensemble
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CbeParams:
    d: int
    beta: float

    def __post_init__(self):
        if self.d < 2 or self.d % 2:
            raise ParameterError(f"CBE walk model needs even d >= 2, got d = {self.d}")
        if not self.beta > 0:
            raise ParameterError(f"beta must be positive, got {self.beta}")


@dataclass(frozen=True)
class VerblunskyCoefficients:
    """Coefficients ``alpha_0 .. alpha_{d-2}`` and the last block's phase.

    ``rho[n] = sqrt(1 - |alpha_n|^2)`` is stored separately because it is the
    accurate quantity when ``|alpha_n|`` is tiny.
    """

    alpha: np.ndarray
    rho: np.ndarray
    boundary_phase: float

    @property
    def d(self) -> int:
        return self.alpha.size + 1

    def blocks(self) -> np.ndarray:
        """All ``d`` scattering blocks ``Theta_n`` as an array of shape ``(d, 2, 2)``."""
        d = self.d
        th = np.empty((d, 2, 2), dtype=complex)
        th[:-1, 0, 0] = self.alpha.conj()
        th[:-1, 0, 1] = self.rho
        th[:-1, 1, 0] = self.rho
        th[:-1, 1, 1] = -self.alpha
        th[-1] = np.diag([np.exp(1j * self.boundary_phase), 1.0])
        return th


def verblunsky_exponents(d: int, beta: float) -> np.ndarray:
    """``s_n = beta (d - 1 - n) / 2`` for ``n = 0 .. d-2``."""
    n = np.arange(d - 1)
    return beta * (d - 1 - n) / 2.0


def sample_verblunsky(rng: np.random.Generator, params: CbeParams) -> VerblunskyCoefficients:
    alpha, rho = sample_alpha(rng, verblunsky_exponents(params.d, params.beta))
    phi = float(uniform_phase(rng))
    return VerblunskyCoefficients(alpha, rho, phi)


def crystal_coefficients(d: int, boundary_phase: float = 0.0) -> VerblunskyCoefficients:
    """The ``beta -> inf`` point: every ``alpha_n = 0`` so each block is ``sigma_x``."""
    return VerblunskyCoefficients(np.zeros(d - 1, dtype=complex), np.ones(d - 1), float(boundary_phase))


def walk_operators(coeffs: VerblunskyCoefficients):
    """Dense ``(S, L, M)`` of the walk, literally as defined (reference/test use)."""
    d = coeffs.d
    th = coeffs.blocks()
    S = np.roll(np.eye(d, dtype=complex), 1, axis=0)  # S|j> = |j+1>
    L = np.zeros((d, d), dtype=complex)
    M = np.zeros((d, d), dtype=complex)
    for k in range(d // 2):
        M[2 * k:2 * k + 2, 2 * k:2 * k + 2] = th[2 * k]
        L[2 * k:2 * k + 2, 2 * k:2 * k + 2] = th[2 * k + 1]
    return S, L, M


def cmv_matrix(coeffs: VerblunskyCoefficients) -> np.ndarray:
    """``U = (S L S^H) M`` assembled in O(d^2) from the block structure.

    ``M`` couples pairs ``(2k, 2k+1)``; ``S L S^H`` couples ``(2k+1, 2k+2 mod d)``.
    """
    d = coeffs.d
    l = d // 2
    th = coeffs.blocks()
    M = np.zeros((l, 2, l, 2), dtype=complex)
    idx = np.arange(l)
    M[idx, :, idx, :] = th[0::2]
    M = M.reshape(d, d)
    shifted = np.roll(M, -1, axis=0).reshape(l, 2, d)  # row pairs (2k+1, 2k+2)
    U = np.einsum("kab,kbj->kaj", th[1::2], shifted).reshape(d, d)
    return np.roll(U, 1, axis=0)


def build_cbe_unitary(params: CbeParams, rng: np.random.Generator, check: bool = True) -> np.ndarray:
    """One sample of the random-walk unitary whose eigenphases follow the CbetaE."""
    U = cmv_matrix(sample_verblunsky(rng, params))
    return certify_unitary(U) if check else U


# ---------------------------------------------------------------------------
# perturbed permutation circuit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PermCircuitParams:
    g: float
    permutation: Permutation
    phases: np.ndarray

    def __post_init__(self):
        if not 0 <= self.g <= np.pi / 2:
            raise ParameterError(f"g must lie in [0, pi/2], got {self.g}")
        if np.shape(self.phases) != (self.permutation.d,):
            raise ParameterError("need one phase per basis state")

    @property
    def d(self) -> int:
        return self.permutation.d


def expm_hermitian(H: np.ndarray, g: float) -> np.ndarray:
    """``exp(-i g H)`` through the eigendecomposition of the Hermitian ``H``."""
    w, V = np.linalg.eigh(H)
    return (V * np.exp(-1j * g * w)) @ V.conj().T


def build_perturbed_permutation(params: PermCircuitParams, gue: np.ndarray, check: bool = True) -> np.ndarray:
    d = params.d
    if gue.shape != (d, d):
        raise ParameterError(f"H has shape {gue.shape} but the permutation acts on d = {d}")
    S = params.permutation.matrix(params.phases)
    U = S if params.g == 0 else expm_hermitian(gue, params.g) @ S
    return certify_unitary(U) if check else U


def sample_perturbed_permutation(
    rng: np.random.Generator, g: float, permutation: Permutation, check: bool = True
) -> np.ndarray:
    """Fresh phases and a fresh GUE matrix on top of a fixed permutation."""
    d = permutation.d
    phases = uniform_phase(rng, d)
    params = PermCircuitParams(g, permutation, phases)
    H = sample_gue(rng, d)
    return build_perturbed_permutation(params, H, check=check)


# ---------------------------------------------------------------------------
# Lax matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LaxParams:
    g: float
    momenta: np.ndarray

    def __post_init__(self):
        if not 0 < self.g < 1:
            raise ParameterError(
                f"Lax matrix needs 0 < g < 1, got {self.g}; use lax_shift_limit/lax_diagonal_limit"
            )

    @property
    def d(self) -> int:
        return int(np.size(self.momenta))


def build_lax_unitary(params: LaxParams, check: bool = True) -> np.ndarray:
    """``U_mn = exp(i p_m) (1 - e^{2 pi i g}) / (d (1 - e^{2 pi i (m - n + g)/d}))``, m, n = 0..d-1."""
    d, g = params.d, params.g
    diff = np.arange(d)[:, None] - np.arange(d)[None, :]
    num = -np.expm1(2j * np.pi * g)
    den = -np.expm1(2j * np.pi * (diff + g) / d)
    U = np.exp(1j * np.asarray(params.momenta))[:, None] * (num / (d * den))
    return certify_unitary(U, LAX_UNITARY_TOL) if check else U


def lax_shift_limit(momenta: np.ndarray) -> np.ndarray:
    """``g -> 1``: ``U_mn = exp(i p_m) delta_{m+1, n}`` with cyclic indices."""
    d = np.size(momenta)
    U = np.zeros((d, d), dtype=complex)
    m = np.arange(d)
    U[m, (m + 1) % d] = np.exp(1j * np.asarray(momenta))
    return U


def lax_diagonal_limit(momenta: np.ndarray) -> np.ndarray:
    """``g -> 0``: ``U = diag(exp(i p_m))``."""
    return np.diag(np.exp(1j * np.asarray(momenta)))


def sample_lax(rng: np.random.Generator, d: int, g: float, check: bool = True) -> np.ndarray:
    momenta = uniform_phase(rng, d)
    if g == 1:
        return lax_shift_limit(momenta)
    if g == 0:
        return lax_diagonal_limit(momenta)
    return build_lax_unitary(LaxParams(g, momenta), check=check)


# ---------------------------------------------------------------------------
# local staircase circuit
# ---------------------------------------------------------------------------

MAX_STAIRCASE_QUBITS = 14


def staircase_layout(L: int, n: int) -> list[tuple[int, ...]]:
    """Qubits of each block in product order (leftmost factor first).

    Block ``n m + k`` covers qubits ``nm+k .. nm+k+n-1`` with periodic
    wrap-around past qubit ``L-1``.
    """
    if n < 2:
        raise ParameterError(f"block width n must be >= 2, got {n}")
    if n > L:
        raise ParameterError(f"block width n = {n} exceeds chain length L = {L}")
    layout = []
    for k in range(n):
        for m in range(L // n):
            start = n * m + k
            layout.append(tuple((start + i) % L for i in range(n)))
    return layout


@dataclass
class LocalCircuitParams:
    L: int
    n: int
    g: float
    permutations: list[Permutation]
    phases: list[np.ndarray] = field(default_factory=list)
    hamiltonians: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if self.L > MAX_STAIRCASE_QUBITS:
            raise ResourceError(f"L = {self.L} qubits exceeds the dense limit {MAX_STAIRCASE_QUBITS}")
        nblocks = len(staircase_layout(self.L, self.n))
        if len(self.permutations) != nblocks:
            raise ParameterError(f"need {nblocks} block permutations, got {len(self.permutations)}")
        for p in self.permutations:
            if p.d != 2**self.n:
                raise ParameterError(f"block permutation acts on {p.d} states, expected {2**self.n}")


def staircase_permutation(L: int, n: int, permutations: Sequence[Permutation]) -> Permutation:
    """Global basis permutation of the ``g = 0`` staircase (phases ignored)."""
    layout = staircase_layout(L, n)
    x = np.arange(2**L)
    # U = F_0 F_1 ... F_last: the last factor acts first
    for qubits, perm in zip(reversed(layout), reversed(list(permutations))):
        bits = [(x >> q) & 1 for q in qubits]
        local = sum(b << i for i, b in enumerate(bits))
        new_local = perm.mapping[local]
        for i, q in enumerate(qubits):
            x = (x & ~(1 << q)) | (((new_local >> i) & 1) << q)
    return Permutation.from_mapping(x)


def build_local_staircase(params: LocalCircuitParams, check: bool = True) -> np.ndarray:
    """Dense ``U = prod_k prod_m exp(-i g H_{nm+k}) S_{nm+k}`` on ``2**L`` states."""
    L, n = params.L, params.n
    layout = staircase_layout(L, n)
    nb = len(layout)
    phases = params.phases or [np.zeros(2**n)] * nb
    hams = params.hamiltonians
    if params.g != 0 and len(hams) != nb:
        raise ParameterError(f"need {nb} block Hamiltonians, got {len(hams)}")
    U = np.eye(2**L, dtype=complex)
    for b in reversed(range(nb)):
        G = params.permutations[b].matrix(phases[b])
        if params.g != 0:
            G = expm_hermitian(hams[b], params.g) @ G
        U = apply_gate(U, G, layout[b], L)
    return certify_unitary(U) if check else U


def sample_local_staircase(
    rng: np.random.Generator, L: int, n: int, g: float, permutations: Sequence[Permutation], check: bool = True
) -> np.ndarray:
    """Fresh block phases and GUE blocks (dimension ``2**n``) on fixed block permutations."""
    nb = len(staircase_layout(L, n))
    phases = [uniform_phase(rng, 2**n) for _ in range(nb)]
    hams = [sample_gue(rng, 2**n) for _ in range(nb)]
    params = LocalCircuitParams(L, n, g, list(permutations), phases, hams)
    return build_local_staircase(params, check=check)


def find_staircase_permutations(
    rng: np.random.Generator, L: int, n: int, cycle_lengths: Sequence[int] | None = None, max_tries: int = 200_000
) -> list[Permutation]:
    """Draw random block permutations, optionally until the global cycle type matches.

    ``cycle_lengths`` is compared as a multiset. Raises ``ParameterError`` if no
    match is found within ``max_tries``.
    """
    nb = len(staircase_layout(L, n))
    target = None if cycle_lengths is None else sorted(cycle_lengths, reverse=True)
    if target is not None and sum(target) != 2**L:
        raise ParameterError(f"cycle lengths sum to {sum(target)}, expected {2**L}")
    for _ in range(max_tries):
        perms = [sample_permutation(rng, 2**n) for _ in range(nb)]
        if target is None:
            return perms
        if list(staircase_permutation(L, n, perms).cycle_lengths) == target:
            return perms
    raise ParameterError(f"no staircase with cycle type {target} found in {max_tries} tries")


# ---------------------------------------------------------------------------
# matrix dump: u64 LE dimension, then row-major (re, im) f64 LE pairs
# ---------------------------------------------------------------------------

def dump_matrix(U: np.ndarray, path: str | Path) -> None:
    d = U.shape[0]
    if U.shape != (d, d):
        raise ParameterError("only square matrices can be dumped")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", d))
        fh.write(np.ascontiguousarray(U, dtype="<c16").tobytes())


def load_matrix(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    (d,) = struct.unpack("<Q", raw[:8])
    if len(raw) != 8 + 16 * d * d:
        raise ValueError(f"{path}: expected {8 + 16 * d * d} bytes for d = {d}, found {len(raw)}")
    return np.frombuffer(raw[8:], dtype="<c16").reshape(d, d).astype(complex)

