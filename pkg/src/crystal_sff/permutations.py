"""Permutations of ``{0, ..., d-1}`` with their cycle decomposition."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class Permutation:
    """A bijection ``k -> mapping[k]`` together with its cycles.

    Cycles are listed by decreasing length; each cycle starts at its smallest
    element and follows the map, ``c[i+1] = mapping[c[i]]``.
    """

    mapping: np.ndarray
    cycles: tuple[tuple[int, ...], ...] = field(repr=False)

    @classmethod
    def from_mapping(cls, mapping: Sequence[int]) -> "Permutation":
        arr = np.asarray(mapping, dtype=np.int64)
        d = arr.size
        if arr.ndim != 1 or not np.array_equal(np.sort(arr), np.arange(d)):
            raise ValueError("mapping is not a bijection on {0..d-1}")
        arr = arr.copy()
        arr.flags.writeable = False
        return cls(arr, _cycles_of(arr))

    @classmethod
    def from_cycles(cls, cycles: Sequence[Sequence[int]]) -> "Permutation":
        d = sum(len(c) for c in cycles)
        mapping = np.full(d, -1, dtype=np.int64)
        for cyc in cycles:
            for a, b in zip(cyc, list(cyc[1:]) + [cyc[0]]):
                mapping[a] = b
        return cls.from_mapping(mapping)

    @classmethod
    def from_cycle_lengths(cls, lengths: Sequence[int]) -> "Permutation":
        """Consecutive-block permutation: cycle ``(s, s+1, ..., s+len-1)`` per length."""
        cycles, start = [], 0
        for n in lengths:
            if n < 1:
                raise ValueError("cycle lengths must be positive")
            cycles.append(list(range(start, start + n)))
            start += n
        return cls.from_cycles(cycles)

    @property
    def d(self) -> int:
        return int(self.mapping.size)

    @property
    def cycle_lengths(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.cycles)

    def matrix(self, phases: np.ndarray | None = None) -> np.ndarray:
        """Dense ``S`` with ``S|k> = exp(i phases[k]) |mapping[k]>``."""
        d = self.d
        S = np.zeros((d, d), dtype=complex)
        vals = np.ones(d) if phases is None else np.exp(1j * np.asarray(phases))
        S[self.mapping, np.arange(d)] = vals
        return S

    def compose(self, other: "Permutation") -> "Permutation":
        """``self o other``: apply ``other`` first."""
        return Permutation.from_mapping(self.mapping[other.mapping])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Permutation):
            return NotImplemented
        return np.array_equal(self.mapping, other.mapping)

    def __hash__(self) -> int:
        return hash(self.mapping.tobytes())


def _cycles_of(mapping: np.ndarray) -> tuple[tuple[int, ...], ...]:
    seen = np.zeros(mapping.size, dtype=bool)
    cycles = []
    for start in range(mapping.size):
        if seen[start]:
            continue
        cyc = []
        k = start
        while not seen[k]:
            seen[k] = True
            cyc.append(k)
            k = int(mapping[k])
        cycles.append(tuple(cyc))
    # stable: equal lengths keep ascending start order
    cycles.sort(key=len, reverse=True)
    return tuple(cycles)
