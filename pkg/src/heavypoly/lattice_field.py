"""Stateless disorder field omega_{n,z} keyed by a master seed.

Each site hashes (seed, n, z) to a uniform in (0, 1) and pushes it through
the environment's inverse transform, so any site can be read in O(1) and in
any order. An optional overlay replaces chosen sites (used for the
size-biased field).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Sequence, Tuple

import numpy as np

from . import _kernels
from .environment import EnvironmentLaw

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class LatticeField:
    master_seed: int
    env: EnvironmentLaw
    overlay: Mapping[Tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "master_seed", int(self.master_seed) & _MASK64)
        object.__setattr__(self, "overlay", MappingProxyType(dict(self.overlay)))

    def uniform(self, n, z):
        return _kernels.site_uniforms_np(self.master_seed, n, z)

    def value(self, n: int, z: int) -> float:
        if n < 1:
            raise ValueError("time index starts at 1")
        key = (int(n), int(z))
        if key in self.overlay:
            return float(self.overlay[key])
        return float(self.env.from_uniform(self.uniform(n, z)))

    def values(self, n, z):
        """Vectorised ``value`` over broadcast arrays of times and positions."""
        n, z = np.broadcast_arrays(np.asarray(n, dtype=np.int64), np.asarray(z, dtype=np.int64))
        if n.size and n.min() < 1:
            raise ValueError("time index starts at 1")
        out = np.asarray(self.env.from_uniform(self.uniform(n, z)), dtype=np.float64)
        self._apply_overlay(out, n, z)
        return out

    def grid(self, times: Sequence[int], positions: Sequence[int]) -> np.ndarray:
        """Values on the product ``times x positions`` as a (T, P) array."""
        times = np.asarray(times, dtype=np.int64)
        positions = np.asarray(positions, dtype=np.int64)
        if times.size and times.min() < 1:
            raise ValueError("time index starts at 1")
        u = _kernels.site_grid(self.master_seed, times, positions)
        out = np.asarray(self.env.from_uniform(u), dtype=np.float64)
        if self.overlay:
            self._apply_overlay(out, times[:, None] + 0 * positions[None, :],
                                positions[None, :] + 0 * times[:, None])
        return out

    def _apply_overlay(self, out, n, z):
        if not self.overlay:
            return
        for (on, oz), v in self.overlay.items():
            out[(n == on) & (z == oz)] = v

    def with_path_overlay(self, path: Sequence[int], tilted_values: Sequence[float],
                          start_time: int = 1) -> "LatticeField":
        """New field with omega at (start_time + k, path[k]) set to tilted_values[k]."""
        if len(path) != len(tilted_values):
            raise ValueError("path and tilted_values differ in length")
        merged = dict(self.overlay)
        for k, (z, v) in enumerate(zip(path, tilted_values)):
            merged[(start_time + k, int(z))] = float(v)
        return LatticeField(self.master_seed, self.env, merged)
