"""Seeded random streams and the scalar/matrix distributions used by the ensembles.

Every sample of a Monte-Carlo run owns a generator derived from
``(master_seed, sample_index)`` through :class:`numpy.random.SeedSequence`, so
results do not depend on how samples are distributed across workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .permutations import Permutation

_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    sample_index: int = 0

    def __post_init__(self):
        if not 0 <= int(self.master_seed) <= _U64:
            raise ValueError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if int(self.sample_index) < 0:
            raise ValueError(f"sample_index must be non-negative, got {self.sample_index}")


def derive_stream(seed: SeedSpec | int, sample_index: int | None = None) -> np.random.Generator:
    """Return the PCG64 generator owned by ``(master_seed, sample_index)``.

    Accepts either a :class:`SeedSpec` or the two integers directly.
    """
    if not isinstance(seed, SeedSpec):
        seed = SeedSpec(int(seed), 0 if sample_index is None else int(sample_index))
    elif sample_index is not None:
        raise TypeError("sample_index given twice")
    ss = np.random.SeedSequence([int(seed.master_seed), int(seed.sample_index)])
    return np.random.Generator(np.random.PCG64(ss))


def uniform_phase(rng: np.random.Generator, size=None):
    """Uniform angles on ``(-pi, pi]``."""
    return np.pi - 2.0 * np.pi * rng.random(size)


def sample_alpha(rng: np.random.Generator, s, size=None):
    """Draw Verblunsky coefficients with density ``(1 - |a|^2)^(s - 1)`` on the unit disk.

    ``|a|^2`` is Beta(1, s), sampled by inverting its CDF: ``|a|^2 = 1 - u^(1/s)``.
    ``s`` may be an array (one exponent per coefficient) or ``inf`` (returns 0).

    Returns ``(alpha, rho)`` with ``rho = sqrt(1 - |alpha|^2)`` computed without
    cancellation, which matters when ``s`` is large and ``|alpha|`` tiny.
    """
    s = np.asarray(s, dtype=float)
    if np.any(~(s > 0)):
        raise ValueError(f"s exponent must be positive, got {s}")
    if size is None:
        size = s.shape
    u = 1.0 - rng.random(size)  # (0, 1], keeps |alpha| < 1 strictly
    log_u_over_s = np.log(u) / s
    abs2 = -np.expm1(log_u_over_s)
    rho = np.exp(0.5 * log_u_over_s)
    phase = uniform_phase(rng, size)
    alpha = np.sqrt(abs2) * np.exp(1j * phase)
    return alpha, rho


def sample_gue(rng: np.random.Generator, d: int) -> np.ndarray:
    """Hermitian matrix with density proportional to ``exp(-(d/2) tr H^2)``.

    Diagonal entries are N(0, 1/d); real and imaginary parts of off-diagonal
    entries are N(0, 1/(2d)). The spectrum fills (-2, 2) as d grows.
    """
    if d < 1:
        raise ValueError(f"GUE dimension must be >= 1, got {d}")
    X = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    # diagonal Re X_ii / sqrt(d); off-diagonal parts average two unit normals
    return (X + X.conj().T) / (2.0 * np.sqrt(d))


def sample_permutation(rng: np.random.Generator, d: int) -> Permutation:
    """Uniform random permutation of ``{0..d-1}`` (Fisher-Yates via ``Generator.permutation``)."""
    if d < 1:
        raise ValueError(f"permutation size must be >= 1, got {d}")
    return Permutation.from_mapping(rng.permutation(d))
