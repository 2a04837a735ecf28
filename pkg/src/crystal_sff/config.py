"""Experiment configuration: YAML in, validated dataclass out, samplers per ensemble."""

from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from .ensembles import (
    MAX_STAIRCASE_QUBITS,
    CbeParams,
    build_cbe_unitary,
    find_staircase_permutations,
    sample_lax,
    sample_local_staircase,
    sample_perturbed_permutation,
)
from .errors import ConfigError
from .permutations import Permutation
from .rng import derive_stream, sample_permutation

ENSEMBLES = ("cbe", "perm", "perm_local", "lax")
THEORY_KINDS = {
    "cbe": ("cbe_gaussian", "dw_envelope", "cue", "poisson"),
    "perm": ("perm_cycles", "cue", "poisson"),
    "perm_local": ("perm_cycles", "cue", "poisson"),
    "lax": ("lax", "cue", "poisson"),
}


@dataclass
class ExperimentConfig:
    ensemble: str
    n_samples: int
    t_max: int
    master_seed: int = 0
    d: int | None = None
    L: int | None = None
    n: int | None = None
    beta: float | None = None
    g: float | None = None
    # "random" or a list of cycle lengths (explicit cycle type)
    permutation: str | list | None = None
    permutation_seed: int = 0
    workers: int | None = None
    output: str | None = None
    theory: list = field(default_factory=list)
    tau_step: float | None = None

    # -- serialisation ------------------------------------------------------
    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("", "config must be a mapping")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(unknown[0], "unknown field")
        for req in ("ensemble", "n_samples", "t_max"):
            if req not in raw:
                raise ConfigError(req, "required field missing")
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            raw = yaml.safe_load(Path(path).read_text())
        except yaml.YAMLError as exc:
            raise ConfigError("", f"{path}: not valid YAML ({exc})") from exc
        return cls.from_dict(raw)

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(self.to_yaml())

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    # -- validation ---------------------------------------------------------
    def validate(self) -> None:
        _int(self, "n_samples", lo=2)
        _int(self, "t_max", lo=0)
        _int(self, "master_seed", lo=0, hi=(1 << 64) - 1)
        _int(self, "permutation_seed", lo=0, hi=(1 << 64) - 1)
        if self.workers is not None:
            _int(self, "workers", lo=1)
        if self.ensemble not in ENSEMBLES:
            raise ConfigError("ensemble", f"must be one of {ENSEMBLES}, got {self.ensemble!r}")
        e = self.ensemble
        if e == "perm_local":
            _int(self, "L", lo=2, hi=MAX_STAIRCASE_QUBITS)
            _int(self, "n", lo=2, hi=self.L)
            if self.d is not None and self.d != 2**self.L:
                raise ConfigError("d", f"must equal 2**L = {2**self.L} when given")
        else:
            _int(self, "d", lo=1)
        if e == "cbe":
            if self.d < 2 or self.d % 2:
                raise ConfigError("d", f"CBE model needs an even d >= 2, got {self.d}")
            _real(self, "beta", lo=0, lo_open=True, allow_inf=True)
        if e in ("perm", "perm_local"):
            _real(self, "g", lo=0, hi=math.pi / 2)
            self._validate_permutation()
        if e == "lax":
            _real(self, "g", lo=0, hi=1)
        if not isinstance(self.theory, list):
            raise ConfigError("theory", "must be a list of theory kinds")
        for i, kind in enumerate(self.theory):
            if kind not in THEORY_KINDS[e]:
                raise ConfigError(f"theory[{i}]", f"{kind!r} not available for ensemble {e!r}")
        if self.tau_step is not None:
            _real(self, "tau_step", lo=0, lo_open=True)

    def _validate_permutation(self):
        p = self.permutation
        if p == "random":
            return
        if not isinstance(p, list) or not p:
            raise ConfigError("permutation", "must be 'random' or a list of cycle lengths")
        for i, c in enumerate(p):
            if not isinstance(c, int) or isinstance(c, bool) or c < 1:
                raise ConfigError(f"permutation[{i}]", f"cycle length must be a positive integer, got {c!r}")
        if sum(p) != self.dim:
            raise ConfigError("permutation", f"cycle lengths sum to {sum(p)}, expected {self.dim}")

    @property
    def dim(self) -> int:
        return 2**self.L if self.ensemble == "perm_local" else self.d

    def effective_workers(self) -> int:
        return self.workers or os.cpu_count() or 1


def _int(cfg, name, lo=None, hi=None):
    v = getattr(cfg, name)
    if not isinstance(v, int) or isinstance(v, bool):
        raise ConfigError(name, f"must be an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ConfigError(name, f"must be >= {lo}, got {v}")
    if hi is not None and v > hi:
        raise ConfigError(name, f"must be <= {hi}, got {v}")


def _real(cfg, name, lo=None, hi=None, lo_open=False, allow_inf=False):
    v = getattr(cfg, name)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(name, f"must be a number, got {v!r}")
    if math.isnan(v) or (math.isinf(v) and not allow_inf):
        raise ConfigError(name, f"must be finite, got {v}")
    if lo is not None and (v < lo or (lo_open and v == lo)):
        raise ConfigError(name, f"must be {'>' if lo_open else '>='} {lo}, got {v}")
    if hi is not None and v > hi:
        raise ConfigError(name, f"must be <= {hi}, got {v}")


# ---------------------------------------------------------------------------
# samplers: picklable callables rng -> U
# ---------------------------------------------------------------------------

@dataclass
class CbeSampler:
    d: int
    beta: float

    def __call__(self, rng):
        return build_cbe_unitary(CbeParams(self.d, self.beta), rng)


@dataclass
class PermSampler:
    g: float
    permutation: Permutation

    def __call__(self, rng):
        return sample_perturbed_permutation(rng, self.g, self.permutation)


@dataclass
class LaxSampler:
    d: int
    g: float

    def __call__(self, rng):
        return sample_lax(rng, self.d, self.g)


@dataclass
class LocalSampler:
    L: int
    n: int
    g: float
    permutations: list

    def __call__(self, rng):
        return sample_local_staircase(rng, self.L, self.n, self.g, self.permutations)


def fixed_permutation(cfg: ExperimentConfig) -> Permutation:
    """The permutation held fixed across samples of the ``perm`` model."""
    if cfg.permutation == "random":
        return sample_permutation(derive_stream(cfg.permutation_seed, 0), cfg.d)
    return Permutation.from_cycle_lengths(cfg.permutation)


def fixed_block_permutations(cfg: ExperimentConfig) -> list[Permutation]:
    rng = derive_stream(cfg.permutation_seed, 0)
    cycles = None if cfg.permutation == "random" else cfg.permutation
    return find_staircase_permutations(rng, cfg.L, cfg.n, cycles)


def make_sampler(cfg: ExperimentConfig):
    e = cfg.ensemble
    if e == "cbe":
        return CbeSampler(cfg.d, cfg.beta)
    if e == "perm":
        return PermSampler(cfg.g, fixed_permutation(cfg))
    if e == "lax":
        return LaxSampler(cfg.d, cfg.g)
    return LocalSampler(cfg.L, cfg.n, cfg.g, fixed_block_permutations(cfg))


def cycle_lengths(cfg: ExperimentConfig, sampler=None) -> tuple[int, ...]:
    """Cycle type of the unperturbed permutation (perm and perm_local)."""
    from .ensembles import staircase_permutation

    if cfg.ensemble == "perm":
        perm = sampler.permutation if sampler is not None else fixed_permutation(cfg)
        return perm.cycle_lengths
    perms = sampler.permutations if sampler is not None else fixed_block_permutations(cfg)
    return staircase_permutation(cfg.L, cfg.n, perms).cycle_lengths


def theory_grid(cfg: ExperimentConfig) -> np.ndarray:
    if cfg.tau_step is None:
        return np.arange(cfg.t_max + 1)
    d = cfg.dim
    n = int(math.floor(cfg.t_max / (cfg.tau_step * d) + 1e-9))
    return d * np.round(cfg.tau_step * np.arange(1, n + 1), 12)
