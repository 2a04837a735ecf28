"""Bragg-peak extraction, Debye-Waller envelope fits and theory-vs-numerics reports."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InsufficientDataError, ParameterError
from .spectral import SffCurve
from .theory import TheoryCurve

MIN_PEAK_SNR = 2.0


@dataclass
class PeakSeries:
    period: int
    d: int
    tau: np.ndarray
    t: np.ndarray
    heights: np.ndarray  # (K - d) / (d^2 - d)
    stderr: np.ndarray


@dataclass
class FitResult:
    """Weighted fit ``ln h = intercept - decay * tau^2``."""

    decay: float
    decay_err: float
    intercept: float
    intercept_err: float
    residual_norm: float
    dof: int
    chi2: float | None
    used_tau: list
    excluded_tau: list
    flags: list = field(default_factory=list)
    derived: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class CompareReport:
    t_range: tuple
    window: int
    n_points: int
    max_rel: float
    mean_rel: float
    max_rel_smoothed: float
    mean_rel_smoothed: float
    n_beyond_3sigma: int
    frac_beyond_3sigma: float

    def to_dict(self) -> dict:
        return asdict(self)


def extract_peaks(curve: SffCurve, period: int, tau_max: int, d: int | None = None) -> PeakSeries:
    """Normalised heights at ``t = tau * period`` for ``tau = 1..tau_max`` (exact grid points)."""
    if period < 1 or tau_max < 1:
        raise ParameterError("period and tau_max must be positive")
    t_peaks = period * np.arange(1, tau_max + 1)
    pos = {int(t): i for i, t in enumerate(curve.t)}
    missing = [int(t) for t in t_peaks if int(t) not in pos]
    if missing:
        raise ParameterError(f"peak times {missing[:3]}... not on the curve grid (t_max = {curve.t[-1]})")
    if d is None:
        d = curve.d
    idx = np.array([pos[int(t)] for t in t_peaks])
    norm = float(d) ** 2 - d
    heights = (curve.mean[idx] - d) / norm
    stderr = curve.stderr[idx] / norm
    return PeakSeries(period, d, np.arange(1, tau_max + 1), t_peaks, heights, stderr)


def fit_debye_waller(
    peaks: PeakSeries, model: str | None = None, g: float | None = None, min_snr: float = MIN_PEAK_SNR
) -> FitResult:
    """Log-linear regression of peak heights on ``tau^2``.

    Peaks with ``h <= min_snr * stderr`` (or ``h <= 0``) are dropped. With
    positive stderr the fit is weighted by ``(h/stderr)^2`` and the parameter
    errors come from the unscaled covariance; exact data fall back to an
    ordinary fit with residual-scaled covariance.

    ``model`` adds interpretations of the decay rate ``s`` (per ``tau^2`` with
    period ``P``): ``"perm"`` gives ``g^2 d = s d^2/P^2`` and the pinning
    strength ``d/g^2 = P^2/s``; ``"cbe"`` gives ``beta_eff = 4 ln(d)/s``;
    ``"local"`` (needs ``g``) gives the factor ``alpha`` in ``exp(-alpha g^2 t^2/d)``.
    """
    h, se = np.asarray(peaks.heights, float), np.asarray(peaks.stderr, float)
    keep = (h > 0) & (h > min_snr * se)
    used = peaks.tau[keep]
    excluded = [int(x) for x in peaks.tau[~keep]]
    if keep.sum() < 3:
        raise InsufficientDataError(f"only {int(keep.sum())} usable peaks; need at least 3")
    x = used.astype(float) ** 2
    y = np.log(h[keep])
    X = np.column_stack([np.ones_like(x), x])
    sigma = se[keep] / h[keep]
    weighted = bool(np.all(sigma > 0))
    if weighted:
        w = 1.0 / sigma**2
        A = X.T @ (X * w[:, None])
        coef = np.linalg.solve(A, X.T @ (w * y))
        cov = np.linalg.inv(A)
        resid = y - X @ coef
        chi2 = float(np.sum(w * resid**2))
    else:
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        resid = y - X @ coef
        dof = len(y) - 2
        s2 = float(resid @ resid) / dof if dof > 0 else 0.0
        cov = s2 * np.linalg.inv(X.T @ X)
        chi2 = None
    decay = float(-coef[1])
    flags = []
    if decay <= 0:
        flags.append("no_decay")
    P, d = peaks.period, peaks.d
    derived = {"decay_per_tau2": decay, "decay_per_t2": decay / P**2}
    if model == "perm":
        derived["g2d"] = decay * d**2 / P**2
        derived["pinning_strength"] = P**2 / decay if decay > 0 else math.inf
    elif model == "cbe":
        derived["four_log_d_over_beta"] = decay * d**2 / P**2
        derived["beta_eff"] = 4 * math.log(d) / derived["four_log_d_over_beta"] if decay > 0 else math.inf
    elif model == "local":
        if not g:
            raise ParameterError("local-model interpretation needs g")
        derived["alpha"] = decay * d / (g**2 * P**2)
    elif model is not None:
        raise ParameterError(f"unknown model {model!r}")
    return FitResult(
        decay=decay,
        decay_err=float(math.sqrt(max(cov[1, 1], 0.0))),
        intercept=float(coef[0]),
        intercept_err=float(math.sqrt(max(cov[0, 0], 0.0))),
        residual_norm=float(np.linalg.norm(resid)),
        dof=len(y) - 2,
        chi2=chi2,
        used_tau=[int(v) for v in used],
        excluded_tau=excluded,
        flags=flags,
        derived=derived,
    )


def moving_average(y: np.ndarray, window: int) -> np.ndarray:
    """Centred moving average; windows are truncated (and renormalised) at the ends."""
    y = np.asarray(y, dtype=float)
    if window <= 1:
        return y.copy()
    lo = window // 2
    hi = window - lo
    c = np.concatenate([[0.0], np.cumsum(y)])
    i = np.arange(y.size)
    a = np.clip(i - lo, 0, y.size)
    b = np.clip(i + hi, 0, y.size)
    return (c[b] - c[a]) / (b - a)


def compare_curves(
    numeric: SffCurve, theory: TheoryCurve, t_range: tuple | None = None, window: int | None = None
) -> CompareReport:
    """Relative deviations ``|numeric - theory| / theory`` on the common integer grid.

    Smoothing (window ``ceil(d/50)`` by default) is applied to both curves over
    the whole overlap before restricting to ``t_range`` (inclusive).
    """
    common, i_num, i_th = np.intersect1d(numeric.t, np.asarray(theory.t), return_indices=True)
    if common.size == 0:
        raise ParameterError("numeric and theory curves share no grid points")
    if window is None:
        window = math.ceil(numeric.d / 50)
    num = numeric.mean[i_num]
    se = numeric.stderr[i_num]
    th = np.asarray(theory.values, dtype=float)[i_th]
    num_s, th_s = moving_average(num, window), moving_average(th, window)
    lo, hi = t_range if t_range is not None else (common[0], common[-1])
    sel = (common >= lo) & (common <= hi)
    if not sel.any():
        raise ParameterError(f"t_range {t_range} has no overlap with the grids")
    dev = np.abs(num - th)[sel]
    rel = dev / np.abs(th[sel])
    rel_s = np.abs(num_s - th_s)[sel] / np.abs(th_s[sel])
    beyond = (dev > 3 * se[sel]) & (dev > 1e-9 * np.abs(th[sel]))
    n = int(sel.sum())
    return CompareReport(
        t_range=(float(lo), float(hi)),
        window=int(window),
        n_points=n,
        max_rel=float(rel.max()),
        mean_rel=float(rel.mean()),
        max_rel_smoothed=float(rel_s.max()),
        mean_rel_smoothed=float(rel_s.mean()),
        n_beyond_3sigma=int(beyond.sum()),
        frac_beyond_3sigma=float(beyond.sum() / n),
    )
