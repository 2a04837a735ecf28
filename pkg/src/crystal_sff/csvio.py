"""CSV exchange format for SFF curves.

Sampled curves: header ``t,K_mean,K_stderr,n``; theory curves: ``t,K_mean``.
An optional first line ``# {json}`` carries the generating configuration.
Floats are written with 17 significant digits so files round-trip exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .spectral import SffCurve
from .theory import TheoryCurve

SFF_HEADER = "t,K_mean,K_stderr,n"
THEORY_HEADER = "t,K_mean"


class CsvFormatError(ConfigError):
    def __init__(self, path, line: int, message: str):
        self.line = line
        super().__init__(f"{path}:{line}", message)


def _num(x) -> str:
    x = float(x)
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return format(x, ".17g")


def write_sff_csv(curve: SffCurve, path, provenance: dict | None = None) -> None:
    lines = []
    if provenance is not None:
        lines.append("# " + json.dumps(provenance, sort_keys=True))
    lines.append(SFF_HEADER)
    n = str(curve.n_samples)
    for t, m, s in zip(curve.t, curve.mean, curve.stderr):
        lines.append(f"{_num(t)},{_num(m)},{_num(s)},{n}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_theory_csv(curve: TheoryCurve, path, provenance: dict | None = None) -> None:
    lines = []
    if provenance is not None:
        lines.append("# " + json.dumps(provenance, sort_keys=True))
    lines.append(THEORY_HEADER)
    for t, v in zip(curve.t, curve.values):
        lines.append(f"{_num(t)},{_num(v)}")
    Path(path).write_text("\n".join(lines) + "\n")


def _rows(path, header):
    text = Path(path).read_text().splitlines()
    meta = {}
    body = []
    seen_header = False
    for lineno, line in enumerate(text, start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            if not seen_header:
                try:
                    meta = json.loads(line[1:])
                except json.JSONDecodeError:
                    pass
            continue
        if not seen_header:
            if line.strip() != header:
                raise CsvFormatError(path, lineno, f"expected header {header!r}, got {line.strip()!r}")
            seen_header = True
            continue
        body.append((lineno, line))
    if not seen_header:
        raise CsvFormatError(path, len(text), "missing header")
    return meta, body


def read_sff_csv(path) -> SffCurve:
    meta, body = _rows(path, SFF_HEADER)
    t, mean, se, ns = [], [], [], []
    for lineno, line in body:
        parts = line.split(",")
        if len(parts) != 4:
            raise CsvFormatError(path, lineno, f"expected 4 columns, got {len(parts)}")
        try:
            t.append(int(parts[0]))
            mean.append(float(parts[1]))
            se.append(float(parts[2]))
            ns.append(int(parts[3]))
        except ValueError as exc:
            raise CsvFormatError(path, lineno, str(exc)) from exc
    if not t:
        raise CsvFormatError(path, 0, "no data rows")
    if len(set(ns)) != 1:
        raise CsvFormatError(path, body[0][0], "sample count n varies between rows")
    return SffCurve(np.array(t), np.array(mean), np.array(se), ns[0], 0, meta)


def read_theory_csv(path, kind: str = "") -> TheoryCurve:
    meta, body = _rows(path, THEORY_HEADER)
    t, v = [], []
    for lineno, line in body:
        parts = line.split(",")
        if len(parts) != 2:
            raise CsvFormatError(path, lineno, f"expected 2 columns, got {len(parts)}")
        try:
            t.append(float(parts[0]))
            v.append(float(parts[1]))
        except ValueError as exc:
            raise CsvFormatError(path, lineno, str(exc)) from exc
    return TheoryCurve(np.array(t), np.array(v), kind or meta.get("kind", ""), meta)
