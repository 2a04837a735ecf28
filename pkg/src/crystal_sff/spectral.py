"""Eigenphases of sampled unitaries and Monte-Carlo estimates of ``K(t) = <|tr U^t|^2>``."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import EigensolverError, NumericalError, ParameterError
from .rng import derive_stream

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-8
TRACE_TOL = 1e-8
MAX_FAILURE_FRACTION = 1e-3
CHUNK_SIZE = 16
DIRECT_TRACE_MAX_D = 128


def _wrap(x):
    return np.pi - np.mod(np.pi - x, 2 * np.pi)


def _cayley_eigh(U: np.ndarray, shift: float, vectors: bool):
    """Eigen-decompose ``W = e^{i shift} U`` through its Hermitian Cayley transform.

    ``H = i (I + W)^{-1} (I - W)`` has eigenvalues ``tan(theta/2)`` for each
    eigenphase ``theta`` of ``W`` and shares its eigenvectors.
    """
    d = U.shape[0]
    W = np.exp(1j * shift) * U
    eye = np.eye(d)
    H = 1j * scipy.linalg.solve(eye + W, eye - W, check_finite=False)
    H = 0.5 * (H + H.conj().T)
    if vectors:
        h, V = scipy.linalg.eigh(H, driver="evd", check_finite=False)
    else:
        h, V = scipy.linalg.eigvalsh(H, driver="evd", check_finite=False), None
    return _wrap(2 * np.arctan(h) - shift), V


def unitary_eigenphases(U: np.ndarray, check: str | None = "residual") -> np.ndarray:
    """Sorted eigenphases of a unitary in ``(-pi, pi]``.

    ``check`` selects the certificate: ``"residual"`` computes eigenvectors and
    requires ``max ||U v - e^{iE} v|| <= 1e-8``; ``"trace"`` only compares
    ``sum e^{iE}`` with ``tr U``; ``None`` skips both.
    """
    U = np.asarray(U)
    d = U.shape[0]
    if U.shape != (d, d):
        raise ParameterError(f"expected a square matrix, got shape {U.shape}")
    if d == 1:
        E = np.array([float(np.angle(U[0, 0]))])
        return _wrap(E)
    vectors = check == "residual"
    shift = 0.5  # keep -1 away from structured spectra such as roots of unity
    try:
        E, V = _cayley_eigh(U, shift, vectors)
        # rotate -1 into the widest gap if some eigenvalue sits close to it
        closest = np.min(np.abs(_wrap(E + shift - np.pi)))
        if not np.all(np.isfinite(E)) or closest < 0.5 * np.pi / d:
            Es = np.sort(E[np.isfinite(E)]) if np.any(np.isfinite(E)) else np.array([0.0])
            gaps = np.diff(np.concatenate([Es, Es[:1] + 2 * np.pi]))
            i = int(np.argmax(gaps))
            mid = Es[i] + gaps[i] / 2
            shift = float(np.pi - mid)
            E, V = _cayley_eigh(U, shift, vectors)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigensolverError(f"eigensolver failed for d = {d}: {exc}") from exc
    if not np.all(np.isfinite(E)):
        raise EigensolverError(f"non-finite eigenphases (d = {d})")
    if check == "residual":
        R = U @ V - V * np.exp(1j * E)
        res = float(np.linalg.norm(R, axis=0).max())
        if not res <= RESIDUAL_TOL:
            raise EigensolverError(f"eigen-residual {res:.3e} > {RESIDUAL_TOL:.0e} (d = {d})")
    elif check == "trace":
        tr = np.trace(U)
        err = abs(np.exp(1j * E).sum() - tr) / max(abs(tr), 1.0)
        if not err <= TRACE_TOL:
            raise EigensolverError(f"trace mismatch {err:.3e} > {TRACE_TOL:.0e} (d = {d})")
    elif check is not None:
        raise ParameterError(f"unknown check {check!r}")
    return np.sort(E)


def sff_from_phases(phases: np.ndarray, t_max: int) -> np.ndarray:
    """``|sum_n e^{i E_n t}|^2`` for ``t = 0..t_max``; a batch of rows gives a batch of curves.

    Each power is the product of two tabulated factors, ``t = j + B k`` with
    ``B ~ sqrt(t_max)``, so the whole grid is one matrix product.
    """
    if t_max < 0:
        raise ParameterError(f"t_max must be >= 0, got {t_max}")
    E = np.atleast_2d(np.asarray(phases, dtype=float))
    T = t_max + 1
    B = max(1, math.isqrt(T - 1) + 1)
    nb = -(-T // B)
    fine = np.exp(1j * np.arange(B)[:, None, None] * E[None])            # (B, S, d)
    coarse = np.exp(1j * (B * np.arange(nb))[:, None, None] * E[None])   # (nb, S, d)
    # traces[s, k, j] = sum_n coarse[k, s, n] fine[j, s, n]
    traces = np.matmul(coarse.transpose(1, 0, 2), fine.transpose(1, 2, 0))
    traces = traces.reshape(E.shape[0], nb * B)[:, :T]
    K = traces.real**2 + traces.imag**2
    return K if np.ndim(phases) > 1 else K[0]


def sff_direct(phases: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Reference evaluation ``|sum_n exp(i E_n t)|^2`` one time at a time."""
    E = np.asarray(phases, dtype=float)
    t = np.atleast_1d(np.asarray(t))
    out = np.empty(t.size)
    for i, ti in enumerate(t):
        z = np.exp(1j * E * ti).sum()
        out[i] = z.real**2 + z.imag**2
    return out


def sff_direct_trace(U: np.ndarray, t_max: int) -> np.ndarray:
    """``|tr U^t|^2`` by repeated multiplication; an oracle independent of eigenphases."""
    d = U.shape[0]
    if d > DIRECT_TRACE_MAX_D:
        raise ParameterError(f"direct-trace oracle limited to d <= {DIRECT_TRACE_MAX_D}, got {d}")
    out = np.empty(t_max + 1)
    P = np.eye(d, dtype=complex)
    for t in range(t_max + 1):
        z = np.trace(P)
        out[t] = z.real**2 + z.imag**2
        P = P @ U
    return out


@dataclass
class SffCurve:
    t: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    n_samples: int
    n_failed: int = 0
    metadata: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return int(round(math.sqrt(self.mean[0])))


@dataclass
class _ChunkResult:
    n: int
    mean: np.ndarray
    m2: np.ndarray
    failures: list


def _run_chunk(args) -> _ChunkResult:
    sampler, master_seed, start, stop, t_max, check = args
    rows, failures = [], []
    for idx in range(start, stop):
        rng = derive_stream(master_seed, idx)
        try:
            U = sampler(rng)
            E = unitary_eigenphases(U, check=check)
        except NumericalError as exc:
            failures.append((idx, str(exc)))
            continue
        rows.append(sff_from_phases(E, t_max))
    if not rows:
        z = np.zeros(t_max + 1)
        return _ChunkResult(0, z, z.copy(), failures)
    K = np.stack(rows)
    mean = K.mean(axis=0)
    m2 = ((K - mean) ** 2).sum(axis=0)
    return _ChunkResult(len(rows), mean, m2, failures)


def _merge(acc: _ChunkResult | None, new: _ChunkResult) -> _ChunkResult:
    if acc is None or acc.n == 0:
        return _ChunkResult(new.n, new.mean, new.m2, acc.failures + new.failures if acc else new.failures)
    if new.n == 0:
        return _ChunkResult(acc.n, acc.mean, acc.m2, acc.failures + new.failures)
    n = acc.n + new.n
    delta = new.mean - acc.mean
    mean = acc.mean + delta * (new.n / n)
    m2 = acc.m2 + new.m2 + delta**2 * (acc.n * new.n / n)
    return _ChunkResult(n, mean, m2, acc.failures + new.failures)


def monte_carlo_sff(
    sampler: Callable[[np.random.Generator], np.ndarray],
    n_samples: int,
    t_max: int,
    master_seed: int,
    workers: int = 1,
    check: str | None = "trace",
    chunk_size: int = CHUNK_SIZE,
    metadata: dict | None = None,
) -> SffCurve:
    """Average per-sample ``K(t)`` over samples ``0..n_samples-1``.

    Sample ``i`` always uses the stream of ``(master_seed, i)`` and chunks are
    merged in index order, so the result is bit-identical for any ``workers``.
    ``sampler`` must be picklable when ``workers > 1``.
    """
    if n_samples < 2:
        raise ParameterError(f"need at least 2 samples, got {n_samples}")
    bounds = [(s, min(s + chunk_size, n_samples)) for s in range(0, n_samples, chunk_size)]
    tasks = [(sampler, master_seed, a, b, t_max, check) for a, b in bounds]
    max_failed = int(MAX_FAILURE_FRACTION * n_samples)
    acc = None
    if workers <= 1:
        results = map(_run_chunk, tasks)
        for res in results:
            acc = _merge(acc, res)
            _check_failures(acc, max_failed)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for res in pool.map(_run_chunk, tasks):
                acc = _merge(acc, res)
                _check_failures(acc, max_failed)
    n = acc.n
    stderr = np.sqrt(acc.m2 / (n - 1) / n) if n > 1 else np.full_like(acc.mean, np.nan)
    if acc.failures:
        log.warning("%d of %d samples failed certification", len(acc.failures), n_samples)
    meta = dict(metadata or {})
    meta["failures"] = [list(f) for f in acc.failures]
    return SffCurve(np.arange(t_max + 1), acc.mean, stderr, n, len(acc.failures), meta)


def _check_failures(acc: _ChunkResult, max_failed: int) -> None:
    if len(acc.failures) > max_failed:
        idx, msg = acc.failures[-1]
        raise NumericalError(
            f"{len(acc.failures)} failed samples exceed the {MAX_FAILURE_FRACTION:.1%} budget "
            f"(last: sample {idx}: {msg})"
        )
