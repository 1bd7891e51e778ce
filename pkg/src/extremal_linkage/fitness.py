"""Counter-based Fréchet fitness field on layered tori and on the integers.

Field values are a pure function of ``(seed, node, layer)``: a 64-bit
avalanche mixer turns the coordinates into a 52-bit key ``k`` and the
uniform deviate is ``(k + 0.5) / 2**52``, which never hits 0 or 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels as K

EULER_GAMMA = 0.5772156649015329

# exp(E[log(2 F)]) for F standard Fréchet: log F is Gumbel with mean gamma,
# so log(mu) = log(2) + gamma. Monte Carlo check: stats.estimate_mu.
MU = 2.0 * math.exp(EULER_GAMMA)
LOG_MU = math.log(MU)

INFINITE = None
_U64 = 1 << 64


def mu() -> float:
    return MU


def _u64(seed: int) -> np.uint64:
    return np.uint64(int(seed) % _U64)


def check_delta(delta: float) -> float:
    delta = float(delta)
    if not delta > 0 or not math.isfinite(delta):
        raise ValueError(f"tail index must be positive and finite, got {delta!r}")
    return delta


@dataclass(frozen=True)
class FieldSpec:
    """Seed, tail index and torus size (``None`` for the limit model on Z)."""

    seed: int
    delta: float
    n: Optional[int] = INFINITE

    def __post_init__(self):
        check_delta(self.delta)
        if self.n is not None and int(self.n) < 1:
            raise ValueError(f"torus size must be >= 1, got {self.n}")

    @property
    def is_torus(self) -> bool:
        return self.n is not None

    @property
    def useed(self) -> np.uint64:
        return _u64(self.seed)

    def reduce(self, i: int) -> int:
        return int(i) % self.n if self.is_torus else int(i)

    def with_seed(self, seed: int) -> "FieldSpec":
        return FieldSpec(seed, self.delta, self.n)


def keys_at(spec: FieldSpec, i, h) -> np.ndarray:
    """Raw 52-bit keys at broadcast coordinates; the order statistic of the field."""
    i_arr, h_arr = np.broadcast_arrays(np.asarray(i, dtype=np.int64), np.asarray(h, dtype=np.int64))
    shape = i_arr.shape
    n = spec.n if spec.is_torus else 0
    out = K.keys_grid(spec.useed, i_arr.flatten(), h_arr.flatten(), int(n))
    return out.reshape(shape)


def uniform_at(spec: FieldSpec, i, h):
    """Uniform deviate in (0, 1) attached to node ``i`` of layer ``h``.

    Scalars in, float out; arrays broadcast.
    """
    k = keys_at(spec, i, h)
    u = (k + 0.5) * K.KEY_SCALE
    return float(u) if u.ndim == 0 else u


def frechet_quantile(u, delta: float):
    """Inverse of ``P(F <= s) = exp(-s**-delta)``."""
    check_delta(delta)
    arr = np.asarray(u, dtype=float)
    if np.any(~((arr > 0) & (arr < 1))):
        raise ValueError("quantile level must lie strictly inside (0, 1)")
    f = (-np.log(arr)) ** (-1.0 / delta)
    return float(f) if f.ndim == 0 else f


def fitness_at(spec: FieldSpec, i, h):
    k = keys_at(spec, i, h)
    f = K.fitness_from_keys(k.ravel(), spec.delta).reshape(k.shape)
    return float(f) if f.ndim == 0 else f


def layer_fitness(spec: FieldSpec, h: int):
    """Keys and fitnesses of every node of torus layer ``h``."""
    if not spec.is_torus:
        raise ValueError("only torus layers can be materialized")
    keys = K.layer_keys(spec.useed, int(spec.n), int(h))
    return keys, K.fitness_from_keys(keys, spec.delta)


def scope(f) -> int:
    """Number of nodes visible from a node of fitness f: ``1 + 2 ceil(f)``."""
    if not f > 0:
        raise ValueError(f"fitness must be positive, got {f!r}")
    return 1 + 2 * math.ceil(f)


def log_fitness(f, delta: float):
    """``log_mu(2 f**delta)``, computed as ``(log 2 + delta log f) / log mu``."""
    f = np.asarray(f, dtype=float)
    g = (math.log(2.0) + delta * np.log(f)) / LOG_MU
    return float(g) if g.ndim == 0 else g


def frechet_draws(count: int, delta: float, seed: int, layer: int = 0) -> np.ndarray:
    """``count`` i.i.d. fitnesses read off consecutive nodes of one limit-model layer."""
    spec = FieldSpec(seed, delta)
    return fitness_at(spec, np.arange(count, dtype=np.int64), layer)
