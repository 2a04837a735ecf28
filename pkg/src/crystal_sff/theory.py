"""Closed-form SFF predictions, Debye-Waller factors and characteristic times."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, SingularPointError

# constant inside log|C d sin(pi k/d)| of the harmonic-crystal two-point sum
C_COULOMB = 3.6

SMALL_REGIME_MAX = 0.1
LARGE_REGIME_MIN = 10.0
LAX_SINGULAR_TOL = 1e-12


class GaussianValidityWarning(UserWarning):
    """Gaussian-approximation SFF evaluated beyond ``t/d <= beta``."""


@dataclass
class TheoryCurve:
    t: np.ndarray
    values: np.ndarray
    kind: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DebyeWallerResult:
    tau: float
    x: float  # 4 tau^2 / beta
    regime: str
    value: float  # e^{-2W}
    W: float
    asymptotic: float  # the regime's closed-form branch


def _cbe_sum(d, beta, t, C, part):
    k = np.arange(1, d)
    log_amp = np.log(np.abs(C * d * np.sin(np.pi * k / d)))
    t = np.asarray(t, dtype=float)
    expo = -4.0 * t[..., None] ** 2 / (beta * d**2)
    amp = np.exp(expo * log_amp)
    arg = 2 * np.pi * np.outer(t, k).reshape(t.shape + (d - 1,)) / d
    if part == "real":
        return d + d * np.sum(np.cos(arg) * amp, axis=-1)
    return d * np.sum(np.sin(arg) * amp, axis=-1)


def cbe_gaussian_sff(d: int, beta: float, t, C: float = C_COULOMB):
    """``K(t) = d + d sum_{k=1}^{d-1} e^{2 pi i k t/d} |C d sin(pi k/d)|^{-4 t^2/(beta d^2)}``.

    The sum is real by ``k <-> d - k`` symmetry, so only the cosine part is
    evaluated. Warns when ``t/d > beta``, where the approximation breaks down.
    """
    if d < 2 or not beta > 0:
        raise ParameterError(f"need d >= 2 and beta > 0, got d = {d}, beta = {beta}")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr / d > beta):
        warnings.warn(f"t/d exceeds beta = {beta}; Gaussian SFF not reliable there", GaussianValidityWarning)
    return _cbe_sum(d, beta, t_arr, C, "real")


def cbe_gaussian_sff_imag(d: int, beta: float, t, C: float = C_COULOMB):
    """Imaginary part of the same sum; vanishes analytically (used as a self-check)."""
    return _cbe_sum(d, beta, np.asarray(t, dtype=float), C, "imag")


def cbe_peak_factor(d: int, beta: float, tau, C: float = C_COULOMB):
    """``e^{-2W}`` read off the Gaussian sum at ``t = tau d``: ``(K - d) / d^2``."""
    K = _cbe_sum(d, beta, np.asarray(tau, dtype=float) * d, C, "real")
    return (K - d) / d**2


def debye_waller(d: int, beta: float, tau: float, C: float = C_COULOMB) -> DebyeWallerResult:
    """Peak suppression ``e^{-2W}`` at ``t = tau d``, by regime of ``x = 4 tau^2 / beta``.

    small (x < 0.1): ``d^{-x}``; large (x > 10): ``(beta/(tau^2 d)) (C pi)^{-x}``;
    crossover: the Gaussian peak sum itself. ``asymptotic`` holds the closed-form
    branch (``log(d)/d`` for the crossover, an order-of-magnitude marker only).
    """
    if tau < 1 or d < 2 or not beta > 0:
        raise ParameterError(f"need tau >= 1, d >= 2, beta > 0; got tau={tau}, d={d}, beta={beta}")
    x = 4.0 * tau**2 / beta
    if x < SMALL_REGIME_MAX:
        regime = "small"
        asym = float(d ** (-x))
        value = asym
    elif x > LARGE_REGIME_MIN:
        regime = "large"
        asym = float(beta / (tau**2 * d) * (C * np.pi) ** (-x))
        value = asym
    else:
        regime = "crossover"
        asym = math.log(d) / d
        value = float(cbe_peak_factor(d, beta, tau, C))
    W = -0.5 * math.log(value) if value > 0 else math.inf
    return DebyeWallerResult(float(tau), x, regime, value, W, asym)


def singularity_order(beta: float, tau: float) -> float:
    """``gamma = 4 tau^2/beta - 1``: derivatives of order >= gamma diverge at ``t = tau d``.

    Trustworthy only for ``tau << beta`` and in the large-d limit.
    """
    if not beta > 0:
        raise ParameterError(f"beta must be positive, got {beta}")
    return 4.0 * tau**2 / beta - 1.0


def perm_sff_prediction(d: int, g: float, cycles, t):
    """``K = d - d e^{-g^2 t^2/d} + [sum_n sin(pi t)/sin(pi t/d_n)]^2 e^{-g^2 t^2/d}``.

    At integer ``t`` each ratio equals ``d_n`` if ``d_n | t`` and 0 otherwise.
    """
    cycles = [int(c) for c in cycles]
    if sum(cycles) != d:
        raise ParameterError(f"cycle lengths sum to {sum(cycles)}, not d = {d}")
    if g < 0:
        raise ParameterError(f"g must be non-negative, got {g}")
    t = np.asarray(t)
    if not np.issubdtype(t.dtype, np.integer):
        if not np.all(t == np.round(t)):
            raise ParameterError("permutation prediction is defined at integer t")
        t = t.astype(np.int64)
    bragg = np.zeros(t.shape)
    for c in cycles:
        bragg = bragg + np.where(t % c == 0, c, 0)
    damp = np.exp(-(g**2) * t.astype(float) ** 2 / d)
    return d - d * damp + bragg**2 * damp


def lax_sff_prediction(g: float, tau):
    """``K(tau d)/d = 1 + 2 Re 1/(e^{2 pi i g tau} [1 + 2 pi i (1-g) tau] - 1)``, exact as d -> inf."""
    if not 0 < g < 1:
        raise ParameterError(f"Lax prediction needs 0 < g < 1, got {g}")
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0):
        raise ParameterError("tau must be positive")
    den = np.exp(2j * np.pi * g * tau) * (1 + 2j * np.pi * (1 - g) * tau) - 1
    if np.any(np.abs(den) < LAX_SINGULAR_TOL):
        raise SingularPointError(f"Lax SFF denominator vanishes (g = {g})")
    return 1 + 2 * np.real(1 / den)


def reference_sff(kind: str, d: int, t):
    """CUE ramp-plateau ``min(t, d)`` or Poisson plateau ``d``; both equal ``d^2`` at ``t = 0``."""
    t = np.asarray(t)
    if kind == "cue":
        out = np.minimum(t, d).astype(float)
    elif kind == "poisson":
        out = np.full(t.shape, float(d))
    else:
        raise ParameterError(f"unknown reference kind {kind!r}")
    return np.where(t == 0, float(d) ** 2, out)


def time_scales(model: str, d: int, beta: float | None = None, g: float | None = None) -> dict:
    """Heisenberg time, plateau time and (perm) Thouless time for each model."""
    out = {"t_H": float(d)}
    if model == "cbe":
        if beta is None:
            raise ParameterError("cbe time scales need beta")
        out["t_star"] = d * math.sqrt(beta / 4)
    elif model == "perm":
        if not g:
            raise ParameterError("perm time scales need g > 0")
        out["t_star"] = math.sqrt(d * math.log(d)) / g
        out["t_thouless"] = math.sqrt(d) / g
    elif model == "lax":
        if g is None or not 0 < g < 1:
            raise ParameterError("lax time scales need 0 < g < 1")
        out["t_star"] = d / (1 - g)
        out["late_period"] = d / g
    else:
        raise ParameterError(f"unknown model {model!r}")
    return out
