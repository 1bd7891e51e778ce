"""Walkers following arrows: two-walker coalescence on the torus and the
single limit-model walker used for the log-fitness growth checks."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels as K
from .fitness import LOG_MU, FieldSpec, check_delta, fitness_at, keys_at
from .seeds import derive_seed

# reserved coordinate for the second walker's start, far from any layer used
START_LAYER = -(1 << 60)
# limit-model windows wider than this switch to the max-stable representation
SCAN_LIMIT = 1 << 20
_TAG_RECURSION = 0x5EED
_LOG2 = math.log(2.0)


@dataclass(frozen=True)
class WalkerState:
    position: int
    fitness: float
    layer: int

    @classmethod
    def start(cls, spec: FieldSpec, position: int, layer: int = 0) -> "WalkerState":
        position = spec.reduce(position)
        return cls(position, fitness_at(spec, position, layer), layer)


@dataclass
class CoalescenceResult:
    h_n: Optional[int]
    meet_position: Optional[int]
    start_left: int
    start_right: int
    cap: int
    trace: Optional[np.ndarray] = None

    @property
    def censored(self) -> bool:
        return self.h_n is None


def walker_step(spec: FieldSpec, state: WalkerState) -> WalkerState:
    """Follow the arrow out of ``(state.position, state.layer)``."""
    h = state.layer
    f = state.fitness
    if spec.is_torus:
        n = int(spec.n)
        r = K.torus_radius(f, n)
        j = int(K.scan_torus(spec.useed, n, state.position, r, h + 1))
    else:
        if not math.isfinite(f) or math.ceil(f) > SCAN_LIMIT:
            raise ValueError("window too wide to scan; use limit_walker_trajectory")
        j = int(K.scan_line(spec.useed, state.position, math.ceil(f), h + 1))
    return WalkerState(j, fitness_at(spec, j, h + 1), h + 1)


def start_right(spec: FieldSpec) -> int:
    """Uniform start node of the second walker, read off a reserved coordinate."""
    u = (int(keys_at(FieldSpec(spec.seed, spec.delta), 0, START_LAYER)) + 0.5) * K.KEY_SCALE
    return min(int(u * spec.n), int(spec.n) - 1)


def default_cap(delta: float, n: int) -> int:
    """Layer budget scaled to the regime of the expected coalescence time."""
    ln_n = math.log(max(n, 2))
    if delta < 1:
        return int(8 * math.log(max(ln_n, 1.0 + 1e-9)) / math.log(1 / delta)) + 64
    if delta == 1:
        return int(16 * ln_n / LOG_MU) + 64
    if delta < 2:
        return int(64 * n ** delta) + 64
    if delta == 2:
        return int(64 * n ** 2 * max(1.0, ln_n)) + 64
    return int(64 * n ** 2) + 64


def coalescence_time(spec: FieldSpec, cap: Optional[int] = None, trace: bool = False,
                     start_b: Optional[int] = None) -> CoalescenceResult:
    """First layer on which the walkers from node 0 and a uniform node meet."""
    if not spec.is_torus:
        raise ValueError("coalescence needs a finite torus")
    n = int(spec.n)
    cap = default_cap(spec.delta, n) if cap is None else int(cap)
    if cap < 1:
        raise ValueError("cap must be >= 1")
    b0 = start_right(spec) if start_b is None else spec.reduce(start_b)
    buf = np.full((cap + 1, 4), np.nan) if trace else np.empty((0, 4))
    h, meet = K.coalesce(spec.useed, n, spec.delta, b0, cap, buf)
    if h == K.CENSORED:
        return CoalescenceResult(None, None, 0, b0, cap, buf if trace else None)
    return CoalescenceResult(int(h), int(meet), 0, b0, cap, buf[: h + 1] if trace else None)


def coalescence_times(delta: float, n: int, seeds, cap: Optional[int] = None):
    """Vectorised ``coalescence_time`` over explicit seeds; returns (h, censored)."""
    check_delta(delta)
    cap = default_cap(delta, n) if cap is None else int(cap)
    seeds = np.asarray([int(s) % (1 << 64) for s in seeds], dtype=np.uint64)
    starts = np.array([start_right(FieldSpec(int(s), delta, n)) for s in seeds], dtype=np.int64)
    out_h = np.empty(len(seeds), dtype=np.int64)
    out_m = np.empty(len(seeds), dtype=np.int64)
    K.coalesce_many(seeds, starts, int(n), float(delta), cap, out_h, out_m)
    censored = out_h == K.CENSORED
    return np.where(censored, cap, out_h), censored


def write_trace_csv(path, result: CoalescenceResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["layer", "pos_left", "pos_right", "fit_left", "fit_right"])
        for h, (a, b, fa, fb) in enumerate(result.trace):
            if np.isnan(a):
                break
            w.writerow([h, int(a), int(b), repr(float(fa)), repr(float(fb))])


# --- limit model ----------------------------------------------------------------

@dataclass
class TrajectoryRecord:
    """Per-layer position, log of the fitness and log-fitness G of one walker.

    ``log_f`` holds natural logs so heavy-tailed paths stay finite long after
    the fitness itself overflows. Positions are exact while windows are
    scanned and approximate (possibly nan) afterwards.
    """

    delta: float
    seed: int
    position: np.ndarray
    log_f: np.ndarray
    scanned: np.ndarray = field(repr=False, default=None)

    @property
    def fitness(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_f)

    @property
    def G(self) -> np.ndarray:
        return (_LOG2 + self.delta * self.log_f) / LOG_MU


def _log_scope(log_f: float) -> float:
    if log_f < 50 * _LOG2:
        return math.log(1 + 2 * math.ceil(math.exp(log_f)))
    return _LOG2 + log_f


def limit_walker_trajectory(delta: float, seed: int, h_max: int,
                            scan_limit: int = SCAN_LIMIT) -> TrajectoryRecord:
    """Walker from (0, 0) in the limit model on Z for ``h_max`` layers.

    Windows up to ``scan_limit`` nodes wide are scanned on the field. Wider
    windows use max-stability instead: the maximum of m Fréchet(delta)
    fitnesses has the law of ``(m F)**(1/delta)`` with F standard Fréchet,
    and its location is uniform in the window.
    """
    check_delta(delta)
    if h_max < 1:
        raise ValueError("h_max must be >= 1")
    spec = FieldSpec(seed, delta)
    aux = FieldSpec(derive_seed(seed, _TAG_RECURSION), 1.0)
    pos = np.empty(h_max + 1)
    log_f = np.empty(h_max + 1)
    scanned = np.zeros(h_max + 1, dtype=bool)
    p = 0
    k0 = int(keys_at(spec, 0, 0))
    y = K.key_log_fitness(k0, delta)
    pos[0], log_f[0], scanned[0] = 0, y, True
    for h in range(h_max):
        radius = math.ceil(math.exp(y)) if y < 40 * _LOG2 else None
        if radius is not None and radius <= scan_limit and p is not None:
            p = int(K.scan_line(spec.useed, p, radius, h + 1))
            y = K.key_log_fitness(int(keys_at(spec, p, h + 1)), delta)
            scanned[h + 1] = True
        else:
            k_max, k_off = keys_at(aux, [0, 1], h + 1)
            y = (_log_scope(y) + K.key_log_fitness(int(k_max), 1.0)) / delta
            if radius is not None and p is not None:
                u = (int(k_off) + 0.5) * K.KEY_SCALE
                p = p + min(int(u * (2 * radius + 1)), 2 * radius) - radius
            else:
                p = None
        pos[h + 1] = np.nan if p is None else p
        log_f[h + 1] = y
    return TrajectoryRecord(delta, seed, pos, log_f, scanned)


def step_offset_moments(f: float, samples: int, seed: int = 0) -> tuple[float, float]:
    """Mean and variance of one limit-model step's displacement from fitness f."""
    if not f > 0:
        raise ValueError("fitness must be positive")
    off = step_offsets(f, samples, seed)
    return float(off.mean()), float(off.var(ddof=1))


def step_offsets(f: float, samples: int, seed: int = 0) -> np.ndarray:
    return K.step_offsets(np.uint64(int(seed) % (1 << 64)), float(f), int(samples), 1)


def one_step_fitness(f: float, delta: float, count: int, seed: int = 0,
                     n: Optional[int] = None) -> np.ndarray:
    """Fitness after one step from (0, 0) when its fitness is f, over fresh fields."""
    seeds = np.array([derive_seed(seed, k) for k in range(count)], dtype=np.uint64)
    return K.one_step_fitness(seeds, float(f), float(delta), 0 if n is None else int(n))


def torus_scope_path(spec: FieldSpec, layers: int, start: int = 0) -> np.ndarray:
    """Scopes (capped at N) seen by one torus walker over ``layers`` steps."""
    return K.torus_scope_path(spec.useed, int(spec.n), spec.delta, spec.reduce(start), int(layers))
