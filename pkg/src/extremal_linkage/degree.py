"""Typical indegree on the torus and its limit on the integers.

Three samplers share one field per seed: layer 0 holds the target (0, 0),
layer -1 holds the sources.

* ``torus``: indegree of (0, 0) on the N-torus.
* ``limit-exact``: arrow rule applied on Z; a source counts iff (0, 0) is
  visible and its window stays strictly between the nearest higher nodes.
* ``limit-paper``: the closed-form count ``1 + D_L + D_R`` built from the
  excursion, kept alongside so the gap to the exact count can be measured.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _kernels as K
from .fitness import FieldSpec, check_delta, fitness_at
from .layers import build_layer_arrows
from .seeds import derive_seed

MAX_EXCURSION = 10 ** 9
MIN_TAIL_SAMPLES = 10 ** 4
MIN_EXCEEDANCES = 20


class Variant(str, Enum):
    TORUS = "torus"
    LIMIT_EXACT = "limit-exact"
    LIMIT_PAPER = "limit-paper"


class ExcursionError(RuntimeError):
    """No higher node within MAX_EXCURSION steps; the field is broken."""


@dataclass
class Excursion:
    L: int
    R: int
    f0: float
    seed: int
    delta: float

    def layer0_values(self) -> np.ndarray:
        """Fitnesses on ``[L, R]`` of layer 0, generated on demand."""
        spec = FieldSpec(self.seed, self.delta)
        return fitness_at(spec, np.arange(self.L, self.R + 1), 0)


@dataclass(frozen=True)
class DegreeSample:
    count: int
    variant: Variant
    seed: int
    n: Optional[int] = None


def sample_excursion(delta: float, seed: int) -> Excursion:
    check_delta(delta)
    spec = FieldSpec(seed, delta)
    left, right = K.excursion(spec.useed, MAX_EXCURSION)
    if left == 0 or right == 0:
        raise ExcursionError(f"no higher node within {MAX_EXCURSION} steps (seed {seed})")
    return Excursion(int(left), int(right), fitness_at(spec, 0, 0), seed, delta)


def excursion_counts(count: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """(L, R) for replications ``derive_seed(seed, k)``, k < count."""
    seeds = replication_seeds(seed, count)
    left = np.empty(count, dtype=np.int64)
    right = np.empty(count, dtype=np.int64)
    for t, s in enumerate(seeds):
        left[t], right[t] = K.excursion(s, MAX_EXCURSION)
    if np.any(left == 0) or np.any(right == 0):
        raise ExcursionError("excursion exceeded the step cap")
    return left, right


def count_paper(ex: Excursion, sources: Sequence[float]) -> int:
    """``1 + D_L + D_R`` for layer -1 fitnesses ``sources`` on ``[L, R]``."""
    L, R = ex.L, ex.R
    count = 1
    for i in range(L, 0):
        f = sources[i - L]
        if -i - 1 < f <= -L + i - 1:
            count += 1
    for i in range(1, R + 1):
        f = sources[i - L]
        if i - 1 < f <= R - i - 1:
            count += 1
    return count


def count_exact(ex: Excursion, sources: Sequence[float]) -> int:
    """Sources on ``(L, R)`` whose arrow lands on (0, 0) in the limit model."""
    L, R = ex.L, ex.R
    count = 0
    for i in range(L + 1, R):
        r = math.ceil(sources[i - L])
        if abs(i) <= r <= min(i - L, R - i) - 1:
            count += 1
    return count


def sample_d_infty_paper(delta: float, seed: int) -> DegreeSample:
    ex = sample_excursion(delta, seed)
    c = K.count_paper(FieldSpec(seed, delta).useed, ex.delta, ex.L, ex.R)
    return DegreeSample(int(c), Variant.LIMIT_PAPER, seed)


def sample_d_infty_exact(delta: float, seed: int) -> DegreeSample:
    ex = sample_excursion(delta, seed)
    c = K.count_exact(FieldSpec(seed, delta).useed, ex.delta, ex.L, ex.R)
    return DegreeSample(int(c), Variant.LIMIT_EXACT, seed)


def sample_indegree_torus(spec: FieldSpec) -> DegreeSample:
    if not spec.is_torus:
        raise ValueError("torus sampler needs a finite N")
    c = K.torus_degree(spec.useed, int(spec.n), spec.delta)
    return DegreeSample(int(c), Variant.TORUS, spec.seed, int(spec.n))


def indegree_torus_bruteforce(spec: FieldSpec) -> int:
    """Materialize layers -1 and 0, build all arrows, count those hitting node 0."""
    targets = build_layer_arrows(spec, -1)
    return int(np.count_nonzero(targets == 0))


def replication_seeds(master: int, count: int) -> np.ndarray:
    return np.array([derive_seed(master, k) for k in range(count)], dtype=np.uint64)


def sample_degrees(variant: Variant | str, delta: float, count: int, seed: int,
                   n: Optional[int] = None) -> np.ndarray:
    """``count`` indegrees, replication k using ``derive_seed(seed, k)``."""
    return degrees_for_seeds(variant, delta, replication_seeds(seed, count), n)


def degrees_for_seeds(variant: Variant | str, delta: float, seeds, n: Optional[int] = None) -> np.ndarray:
    variant = Variant(variant)
    check_delta(delta)
    seeds = np.asarray([int(s) % (1 << 64) for s in seeds], dtype=np.uint64)
    out = np.empty(len(seeds), dtype=np.int64)
    if variant is Variant.TORUS:
        if n is None or n < 1:
            raise ValueError("torus sampler needs n >= 1")
        K.torus_degrees(seeds, int(n), float(delta), out)
    else:
        bad = K.limit_degrees(seeds, float(delta), MAX_EXCURSION,
                              variant is Variant.LIMIT_EXACT, out)
        if bad >= 0:
            raise ExcursionError(f"excursion exceeded the step cap for seed {int(seeds[bad])}")
    return out


def degree_tail_curve(samples: Iterable, min_exceed: int = MIN_EXCEEDANCES) -> list[tuple[int, float]]:
    """Points ``(s, -log P(D > s))`` of the empirical survival function.

    Stops at the first s with fewer than ``min_exceed`` samples above it.
    """
    counts = np.asarray([getattr(x, "count", x) for x in samples], dtype=np.int64)
    if len(counts) < MIN_TAIL_SAMPLES:
        raise ValueError(f"need at least {MIN_TAIL_SAMPLES} samples, got {len(counts)}")
    total = len(counts)
    tally = np.bincount(counts)
    above = total - np.cumsum(tally)  # above[s] = #{D > s}
    curve = []
    for s, k in enumerate(above):
        if k < min_exceed:
            break
        curve.append((s, -math.log(k / total)))
    return curve


def write_curve_csv(path, curve) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s", "neg_log_survival"])
        for s, y in curve:
            w.writerow([int(s), repr(float(y))])
