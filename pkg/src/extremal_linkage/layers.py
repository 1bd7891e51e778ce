"""Window maxima on a layer and the arrow map ``(i, h) -> (j, h + 1)``."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .fitness import FieldSpec, fitness_at, keys_at, layer_fitness


def torus_distance(i: int, j: int, n: int) -> int:
    d = (i - j) % n
    return min(d, n - d)


@dataclass
class LayerView:
    """Materialized torus layer.

    ``order`` is what windows maximise over. Views built from a field use the
    integer keys (fitness is a strictly increasing function of the key);
    views built by hand may just pass the fitness values.
    """

    layer: int
    values: np.ndarray
    order: np.ndarray = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.order = self.values if self.order is None else np.asarray(self.order)
        if self.order.shape != self.values.shape:
            raise ValueError("order and values must have the same length")

    @classmethod
    def from_field(cls, spec: FieldSpec, h: int) -> "LayerView":
        keys, values = layer_fitness(spec, h)
        return cls(h, values, keys)

    @property
    def n(self) -> int:
        return len(self.values)


def _candidates(center: int, radius: int, n: int):
    """Window nodes in tie-break order: distance from center, then index."""
    if 2 * radius + 1 >= n:
        radius = n // 2
    yield center % n
    for d in range(1, radius + 1):
        pair = sorted({(center - d) % n, (center + d) % n})
        yield from pair


def window_argmax(view: LayerView, center: int, radius: int, n: int = None) -> int:
    """Node of maximal order within torus distance ``radius`` of ``center``.

    Exact ties go to the node closer to the center, then to the smaller index.
    """
    n = view.n if n is None else n
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    order = view.order
    best = None
    arg = center % n
    for j in _candidates(center, radius, n):
        if best is None or order[j] > best:
            best = order[j]
            arg = j
    return arg


@dataclass
class WindowIndex:
    """Sparse-table range argmax over a layer doubled end to end.

    ``table[p][s]`` is the position of the maximum of ``order2[s : s + 2**p]``
    where ``order2`` is the layer repeated twice, so every circular window
    shorter than the layer is a contiguous range.
    """

    order: np.ndarray
    table: list = field(default_factory=list)
    tied: np.ndarray = None

    @classmethod
    def build(cls, order) -> "WindowIndex":
        order = np.asarray(order)
        n = len(order)
        doubled = np.concatenate([order, order])
        level = np.arange(2 * n, dtype=np.int32 if n < 2**30 else np.int64)
        table = [level]
        width = 1
        while 2 * width < n:
            prev = table[-1]
            left = prev[: len(prev) - width]
            right = prev[width:]
            take_right = doubled[right] > doubled[left]
            table.append(np.where(take_right, right, left))
            width *= 2
        values, counts = np.unique(order, return_counts=True)
        return cls(order, table, values[counts > 1])

    @property
    def n(self) -> int:
        return len(self.order)

    def _query(self, start: np.ndarray, length: np.ndarray) -> np.ndarray:
        level = np.floor(np.log2(length)).astype(np.int64)
        # float log2 can be off by one at powers of two
        level = np.where((1 << (level + 1)) <= length, level + 1, level)
        level = np.where((1 << level) > length, level - 1, level)
        out = np.empty(len(start), dtype=np.int64)
        doubled = np.concatenate([self.order, self.order])
        for p in np.unique(level):
            sel = level == p
            s = start[sel]
            e = s + length[sel] - (1 << p)
            a = self.table[p][s]
            b = self.table[p][e]
            out[sel] = np.where(doubled[b] > doubled[a], b, a)
        return out % self.n

    def argmax_many(self, centers, radii) -> np.ndarray:
        centers = np.asarray(centers, dtype=np.int64) % self.n
        radii = np.asarray(radii, dtype=np.int64)
        n = self.n
        whole = 2 * radii + 1 >= n
        out = np.empty(len(centers), dtype=np.int64)
        if np.any(whole):
            out[whole] = -1
        part = ~whole
        if np.any(part):
            start = (centers[part] - radii[part]) % n
            out[part] = self._query(start, 2 * radii[part] + 1)
        view = None
        if np.any(whole) or len(self.tied):
            view = LayerView(0, np.zeros(n), self.order)
        if np.any(whole):
            # whole-torus windows share the global maximum unless it is tied
            g = int(np.argmax(self.order))
            if np.count_nonzero(self.order == self.order[g]) == 1:
                out[whole] = g
            else:
                for t in np.flatnonzero(whole):
                    out[t] = window_argmax(view, centers[t], radii[t], n)
        if len(self.tied):
            redo = np.flatnonzero(np.isin(self.order[out], self.tied))
            for t in redo:
                out[t] = window_argmax(view, centers[t], radii[t], n)
        return out

    def argmax(self, center: int, radius: int) -> int:
        return int(self.argmax_many([center], [radius])[0])


def _radius(f: float, n: int) -> int:
    if 1 + 2 * math.ceil(f) >= n:
        return n // 2
    return math.ceil(f)


def arrow(spec: FieldSpec, i: int, h: int) -> int:
    """Target node on layer ``h + 1`` of the arrow leaving ``(i, h)``."""
    f = fitness_at(spec, i, h)
    if spec.is_torus:
        n = int(spec.n)
        return int(K.scan_torus(spec.useed, n, spec.reduce(i), _radius(f, n), h + 1))
    if not math.isfinite(f) or f > 2 ** 40:
        raise ValueError("scope too large to scan in the limit model")
    return int(K.scan_line(spec.useed, int(i), math.ceil(f), h + 1))


def build_layer_arrows(spec: FieldSpec, h: int) -> np.ndarray:
    """Targets of all N arrows leaving torus layer ``h``."""
    if not spec.is_torus:
        raise ValueError("arrow arrays need a finite torus")
    n = int(spec.n)
    _, f = layer_fitness(spec, h)
    index = WindowIndex.build(keys_at(spec, np.arange(n), h + 1))
    radii = np.where(1 + 2 * np.ceil(f) >= n, n // 2, np.ceil(f)).astype(np.int64)
    return index.argmax_many(np.arange(n), radii)
