"""Command-line entry point: ``crystal-sff {sample,theory,fit,compare,verify}``.

Exit codes: 0 success, 2 configuration/input error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import compare_curves, extract_peaks, fit_debye_waller
from .config import ExperimentConfig, cycle_lengths, make_sampler, theory_grid
from .csvio import read_sff_csv, read_theory_csv, write_sff_csv, write_theory_csv
from .errors import ConfigError, InsufficientDataError, NumericalError, ParameterError
from .spectral import SffCurve, monte_carlo_sff
from .theory import (
    TheoryCurve,
    cbe_gaussian_sff,
    cbe_peak_factor,
    lax_sff_prediction,
    perm_sff_prediction,
    reference_sff,
)

log = logging.getLogger("crystal_sff")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

# fields that only affect performance or file placement; left out of CSV provenance
_VOLATILE = ("workers", "output")


def _prepare_out(out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    probe = out / ".write_test"
    probe.write_text("")
    probe.unlink()
    return out


def _provenance(cfg: ExperimentConfig) -> dict:
    d = cfg.to_dict()
    for k in _VOLATILE:
        d.pop(k, None)
    return {"config": d, "version": __version__}


def run_sample(cfg: ExperimentConfig, out_dir=None, workers: int | None = None, seed: int | None = None) -> SffCurve:
    """Monte-Carlo SFF for ``cfg``; writes ``sff.csv`` and the ``sff.json`` sidecar."""
    if seed is not None:
        cfg.master_seed = int(seed)
    if workers is not None:
        cfg.workers = int(workers)
    cfg.validate()
    out = _prepare_out(out_dir or cfg.output or ".")
    sampler = make_sampler(cfg)
    t0 = time.perf_counter()
    curve = monte_carlo_sff(
        sampler,
        cfg.n_samples,
        cfg.t_max,
        cfg.master_seed,
        workers=cfg.effective_workers(),
        metadata={"ensemble": cfg.ensemble, "d": cfg.dim},
    )
    wall = time.perf_counter() - t0
    write_sff_csv(curve, out / "sff.csv", _provenance(cfg))
    sidecar = {
        "config": cfg.to_dict(),
        "version": __version__,
        "wall_time_s": wall,
        "n_samples": curve.n_samples,
        "failure_count": curve.n_failed,
        "failures": curve.metadata.get("failures", []),
    }
    if cfg.ensemble in ("perm", "perm_local"):
        sidecar["cycle_lengths"] = list(cycle_lengths(cfg, sampler))
    (out / "sff.json").write_text(json.dumps(sidecar, indent=2))
    return curve


def theory_curve(cfg: ExperimentConfig, kind: str, t=None, cycles=None) -> TheoryCurve:
    """Evaluate one theory kind on ``t`` (default: the config's grid)."""
    t = theory_grid(cfg) if t is None else np.asarray(t)
    d = cfg.dim
    params = {"d": d}
    if kind == "cbe_gaussian":
        values = cbe_gaussian_sff(d, cfg.beta, t)
        params["beta"] = cfg.beta
    elif kind == "dw_envelope":
        # d + d^2 e^{-2W(tau)} with the Gaussian peak sum as a smooth envelope in tau = t/d
        values = d + d**2 * cbe_peak_factor(d, cfg.beta, np.asarray(t, float) / d)
        params["beta"] = cfg.beta
    elif kind == "perm_cycles":
        if not np.all(np.asarray(t) == np.round(t)):
            raise ParameterError("perm_cycles theory needs an integer time grid")
        cycles = cycles if cycles is not None else cycle_lengths(cfg)
        values = perm_sff_prediction(d, cfg.g, cycles, np.asarray(t).astype(np.int64))
        params.update(g=cfg.g, cycles=list(cycles))
    elif kind == "lax":
        t = np.asarray(t, float)
        values = np.full(t.shape, float(d) ** 2)
        pos = t > 0
        values[pos] = d * lax_sff_prediction(cfg.g, t[pos] / d)
        params["g"] = cfg.g
    elif kind in ("cue", "poisson"):
        values = reference_sff(kind, d, t)
    else:
        raise ParameterError(f"unknown theory kind {kind!r}")
    return TheoryCurve(np.asarray(t), np.asarray(values, float), kind, params)


def run_theory(cfg: ExperimentConfig, out_dir=None, kinds=None) -> dict:
    kinds = list(kinds or cfg.theory)
    if not kinds:
        raise ConfigError("theory", "no theory kinds requested")
    cfg.theory = kinds
    cfg.validate()
    out = _prepare_out(out_dir or cfg.output or ".")
    curves = {}
    for kind in kinds:
        curve = theory_curve(cfg, kind)
        prov = _provenance(cfg) | {"kind": kind, "params": curve.params}
        write_theory_csv(curve, out / f"theory_{kind}.csv", prov)
        curves[kind] = curve
    (out / "theory.json").write_text(
        json.dumps({"config": cfg.to_dict(), "version": __version__, "kinds": kinds}, indent=2)
    )
    return curves


def run_fit(csv_path, period: int, tau_max: int, out_path=None, model=None, g=None):
    curve = read_sff_csv(csv_path)
    peaks = extract_peaks(curve, period, tau_max)
    fit = fit_debye_waller(peaks, model=model, g=g)
    report = {
        "source": str(csv_path),
        "source_provenance": curve.metadata,
        "period": period,
        "tau_max": tau_max,
        "peaks": {"tau": peaks.tau.tolist(), "heights": peaks.heights.tolist(), "stderr": peaks.stderr.tolist()},
        "fit": fit.to_dict(),
    }
    if out_path is not None:
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        Path(out_path).write_text(json.dumps(report, indent=2))
    return fit


def run_compare(csv_path, cfg: ExperimentConfig, kind: str, t_range=None, window=None, theory_csv=None, out_path=None):
    numeric = read_sff_csv(csv_path)
    if theory_csv is not None:
        theory = read_theory_csv(theory_csv, kind)
    else:
        theory = theory_curve(cfg, kind, t=numeric.t)
    report = compare_curves(numeric, theory, t_range=t_range, window=window)
    if out_path is not None:
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        Path(out_path).write_text(
            json.dumps({"source": str(csv_path), "kind": kind, "config": cfg.to_dict(), "report": report.to_dict()}, indent=2)
        )
    return report


# ---------------------------------------------------------------------------
# verify: fast oracle checks
# ---------------------------------------------------------------------------

def verify_checks() -> list[tuple[str, bool, str]]:
    from .circuits import build_brickwork_one_particle, build_walk_multiplexer_unitary
    from .ensembles import CbeParams, cmv_matrix, crystal_coefficients, sample_lax, sample_verblunsky
    from .rng import derive_stream
    from .spectral import sff_direct_trace, sff_from_phases, unitary_eigenphases

    out = []

    def record(name, ok, detail):
        out.append((name, bool(ok), detail))

    rng = derive_stream(2024, 0)
    U = cmv_matrix(crystal_coefficients(16, 0.37))
    K = sff_from_phases(unitary_eigenphases(U), 64)
    off = np.delete(K, [0, 16, 32, 48, 64]).max()
    record("crystal limit", np.allclose(K[::16], 256, rtol=1e-12) and off <= 1e-12 * 256, f"off-peak max {off:.2e}")

    worst = 0.0
    for i in range(5):
        U = sample_lax(derive_stream(2024, i + 1), 64, 0.7)
        a = sff_from_phases(unitary_eigenphases(U), 256)
        b = sff_direct_trace(U, 256)
        worst = max(worst, float(np.max(np.abs(a - b) / np.maximum(b, 1.0))))
    record("phases vs direct trace", worst <= 1e-8, f"max rel err {worst:.2e}")

    c = sample_verblunsky(rng, CbeParams(8, 3.0))
    diff = np.abs(build_walk_multiplexer_unitary(c)[:8, :8] - cmv_matrix(c)).max()
    record("multiplexer circuit", diff <= 1e-12, f"max diff {diff:.2e}")
    c = sample_verblunsky(rng, CbeParams(6, 3.0))
    diff = np.abs(build_brickwork_one_particle(c) - cmv_matrix(c)).max()
    record("brickwork one-particle sector", diff <= 1e-12, f"max diff {diff:.2e}")
    return out


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crystal-sff", description="Crystalline spectral form factor laboratory")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="Monte-Carlo SFF")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.add_argument("--workers", type=int)
    s.add_argument("--seed", type=int)

    t = sub.add_parser("theory", help="analytic SFF curves")
    t.add_argument("--config", required=True)
    t.add_argument("--out")
    t.add_argument("--kind", action="append", help="override the config's theory list")

    f = sub.add_parser("fit", help="Debye-Waller fit of Bragg peaks")
    f.add_argument("--csv", required=True)
    f.add_argument("--period", type=int, required=True)
    f.add_argument("--tau-max", type=int, required=True)
    f.add_argument("--model", choices=["perm", "cbe", "local"])
    f.add_argument("--g", type=float)
    f.add_argument("--out", help="directory for fit.json")

    c = sub.add_parser("compare", help="numeric SFF vs theory")
    c.add_argument("--csv", required=True)
    c.add_argument("--config", required=True)
    c.add_argument("--kind", required=True)
    c.add_argument("--theory-csv")
    c.add_argument("--t-min", type=float)
    c.add_argument("--t-max", type=float)
    c.add_argument("--window", type=int)
    c.add_argument("--out", help="directory for compare.json")

    sub.add_parser("verify", help="run the fast oracle checks")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "sample":
            cfg = ExperimentConfig.load(args.config)
            curve = run_sample(cfg, args.out, workers=args.workers, seed=args.seed)
            print(f"{curve.n_samples} samples, {curve.n_failed} failed -> {Path(args.out or cfg.output or '.') / 'sff.csv'}")
        elif args.command == "theory":
            cfg = ExperimentConfig.load(args.config)
            curves = run_theory(cfg, args.out, kinds=args.kind)
            print("wrote " + ", ".join(f"theory_{k}.csv" for k in curves))
        elif args.command == "fit":
            out = None if args.out is None else Path(args.out) / "fit.json"
            fit = run_fit(args.csv, args.period, args.tau_max, out, model=args.model, g=args.g)
            print(json.dumps(fit.to_dict(), indent=2))
        elif args.command == "compare":
            cfg = ExperimentConfig.load(args.config)
            t_range = None
            if args.t_min is not None or args.t_max is not None:
                t_range = (args.t_min if args.t_min is not None else -math.inf,
                           args.t_max if args.t_max is not None else math.inf)
            out = None if args.out is None else Path(args.out) / "compare.json"
            report = run_compare(args.csv, cfg, args.kind, t_range, args.window, args.theory_csv, out)
            print(json.dumps(report.to_dict(), indent=2))
        elif args.command == "verify":
            results = verify_checks()
            for name, ok, detail in results:
                print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
            return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_NUMERIC
    except (ConfigError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, InsufficientDataError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
