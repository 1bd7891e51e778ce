"""Regime fits for coalescence scans, tail-shape classification, KS distances
and quadrature checks of the Fréchet limits behind the stable regime."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Callable, Iterable, NamedTuple, Sequence, Union

import numpy as np
from scipy import integrate, stats

from .fitness import LOG_MU, check_delta, frechet_draws

MIN_N_VALUES = 3
MIN_REPS = 100
MAX_CENSORING = 0.05


class InsufficientData(ValueError):
    pass


class QuadratureError(RuntimeError):
    pass


class Regime(str, Enum):
    LOG_N = "LOG_N"
    LOGLOG_N = "LOGLOG_N"
    POWER_DELTA = "POWER_DELTA"
    POWER_2 = "POWER_2"


class TailShape(str, Enum):
    LINEAR = "LINEAR"
    LOG = "LOG"
    S_LOG_S = "S_LOG_S"


class ScanRow(NamedTuple):
    delta: float
    n: int
    seed: int
    stat: float
    censored: bool


def _fmt(x: float) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


@dataclass
class ScanTable:
    rows: list = field(default_factory=list)

    def add(self, delta, n, seed, stat, censored=False) -> None:
        self.rows.append(ScanRow(float(delta), int(n), int(seed), float(stat), bool(censored)))

    def validate(self) -> None:
        keys = [(r.delta, r.n, r.seed) for r in self.rows]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate (delta, n, seed) rows")

    def sorted(self) -> "ScanTable":
        return ScanTable(sorted(self.rows, key=lambda r: (r.delta, r.n, r.seed)))

    def n_values(self) -> list[int]:
        return sorted({r.n for r in self.rows})

    def column(self, n: int, delta: float = None):
        sel = [r for r in self.rows if r.n == n and (delta is None or r.delta == delta)]
        return (np.array([r.stat for r in sel], dtype=float),
                np.array([r.censored for r in sel], dtype=bool))

    def write_csv(self, path) -> None:
        self.validate()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["delta", "n", "seed", "stat", "censored"])
            for r in self.sorted().rows:
                w.writerow([repr(r.delta), r.n, r.seed, _fmt(r.stat), int(r.censored)])

    @classmethod
    def read_csv(cls, path) -> "ScanTable":
        table = cls()
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                table.add(float(rec["delta"]), int(rec["n"]), int(rec["seed"]),
                          float(rec["stat"]), rec["censored"] not in ("0", "", "False"))
        table.validate()
        return table


@dataclass
class RegimeFit:
    """Per-N normalised statistics and how stable they are across N.

    For LOG_N the per-N value is ``mean(H) / log_mu(N)``; for LOGLOG_N it is
    ``median(H) - log_{1/delta} log(N)``; for the power regimes it is
    ``median(H) / N**delta`` or ``median(H) / N**2``. ``spread`` is max/min
    for ratios and max - min for LOGLOG_N offsets. Each per-N entry also
    carries the interquartile range from :func:`mid_quantile`.
    """

    regime: Regime
    delta: float
    scale: float
    goodness: float
    spread: float
    trend: float
    censoring_rate: float
    per_n: list = field(default_factory=list)

    def to_json(self) -> str:
        d = asdict(self)
        d["regime"] = self.regime.value
        return json.dumps(d, indent=2, sort_keys=True)


def regime_for(delta: float) -> Regime:
    delta = check_delta(delta)
    if delta == 2:
        raise ValueError("delta = 2 has no regime fit (possible logarithmic corrections)")
    if delta < 1:
        return Regime.LOGLOG_N
    if delta == 1:
        return Regime.LOG_N
    if delta < 2:
        return Regime.POWER_DELTA
    return Regime.POWER_2


def mid_quantile(x, q):
    """Quantiles of the mid-distribution ``F(x) - P(X = x) / 2``, interpolated.

    For lattice-valued data such as coalescence layers the usual sample
    quantiles jump between neighbouring integers, so an IQR built from them
    flips between 0 and 1 with the phase of the lattice. The mid-distribution
    version varies continuously with the underlying law.
    """
    v, c = np.unique(np.asarray(x, dtype=float), return_counts=True)
    if v.size == 0:
        raise ValueError("empty sample")
    p = c / c.sum()
    mid = np.cumsum(p) - p / 2
    out = np.interp(q, mid, v)
    return float(out) if np.ndim(out) == 0 else out


def fit_distance_regime(table: ScanTable, delta: float) -> RegimeFit:
    regime = regime_for(delta)
    rows = [r for r in table.rows if r.delta == delta]
    ns = sorted({r.n for r in rows})
    if len(ns) < MIN_N_VALUES:
        raise InsufficientData(f"need >= {MIN_N_VALUES} torus sizes, got {len(ns)}")
    per_n = []
    total = censored_total = 0
    for n in ns:
        h = np.array([r.stat for r in rows if r.n == n], dtype=float)
        cens = np.array([r.censored for r in rows if r.n == n], dtype=bool)
        if len(h) < MIN_REPS:
            raise InsufficientData(f"need >= {MIN_REPS} replications at N={n}, got {len(h)}")
        total += len(h)
        censored_total += int(cens.sum())
        med = float(np.median(h))
        q1, q3 = mid_quantile(h, [0.25, 0.75])
        if regime is Regime.LOG_N:
            value = h.mean() / (math.log(n) / LOG_MU)
        elif regime is Regime.LOGLOG_N:
            value = med - math.log(math.log(n)) / math.log(1 / delta)
        elif regime is Regime.POWER_DELTA:
            value = med / n ** delta
        else:
            value = med / n ** 2
        per_n.append({"n": n, "reps": len(h), "value": float(value), "mean": float(h.mean()),
                      "median": float(med), "iqr": float(q3 - q1),
                      "censored": float(cens.mean())})
    rate = censored_total / total
    if rate >= MAX_CENSORING:
        raise InsufficientData(f"censoring rate {rate:.3f} is too high for a fit")
    values = np.array([p["value"] for p in per_n])
    x = np.log(np.array(ns, dtype=float))
    trend = float(np.polyfit(x, values, 1)[0])
    if regime is Regime.LOGLOG_N:
        spread = float(values.max() - values.min())
        goodness = 1.0 / (1.0 + spread)
    else:
        spread = float(values.max() / values.min()) if values.min() > 0 else math.inf
        goodness = 1.0 / spread
    return RegimeFit(regime, float(delta), float(values.mean()), goodness, spread, trend,
                     rate, per_n)


_SHAPES = {
    TailShape.LINEAR: lambda s: s,
    TailShape.LOG: np.log,
    TailShape.S_LOG_S: lambda s: s * np.log(s),
}


def shape_residuals(curve: Iterable) -> dict:
    """Residual sum of squares of the through-origin fit ``y ~ c g(s)`` per shape.

    Only points with s >= 1 enter, since ``log s`` is undefined at 0.
    """
    pts = np.asarray(list(curve), dtype=float).reshape(-1, 2)
    pts = pts[pts[:, 0] >= 1]
    if len(pts) < 8:
        raise ValueError(f"need >= 8 support points with s >= 1, got {len(pts)}")
    s, y = pts[:, 0], pts[:, 1]
    if np.ptp(y) == 0:
        raise ValueError("degenerate curve: all values equal")
    out = {}
    for shape, g in _SHAPES.items():
        gs = g(s)
        scale = (gs @ y) / (gs @ gs)
        out[shape] = float(np.sum((y - scale * gs) ** 2))
    return out


def classify_tail_shape(curve: Iterable) -> TailShape:
    res = shape_residuals(curve)
    return min(res, key=res.get)


def ks_distance(a: Sequence[float], b: Union[Sequence[float], Callable]) -> float:
    """Kolmogorov-Smirnov statistic; ``b`` is a sample or a CDF callable."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        raise ValueError("empty sample")
    if callable(b):
        return float(stats.kstest(a, b).statistic)
    b = np.asarray(b, dtype=float)
    if b.size == 0:
        raise ValueError("empty sample")
    return float(stats.ks_2samp(a, b).statistic)


def _quad(f, lo, hi, **kw):
    val, err = integrate.quad(f, lo, hi, epsabs=1e-10, epsrel=1e-10, limit=500, **kw)
    if not math.isfinite(val) or err > 1e-8:
        raise QuadratureError(f"quadrature on [{lo}, {hi}] did not converge (err {err:g})")
    return val


def frechet_limit_part1(a: float, delta: float) -> float:
    """``a E[(1 - (a/F)**(1/delta))_+]`` for standard Fréchet F.

    With ``t = a / x`` the integral over ``x > a`` against the density
    ``x**-2 exp(-1/x)`` becomes ``int_0^1 (1 - t**(1/delta)) exp(-t/a) dt``;
    the factor a cancels. Tends to ``1 / (delta + 1)``.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    if not delta > 1:
        raise ValueError("part 1 needs delta > 1")
    return _quad(lambda t: (1.0 - t ** (1.0 / delta)) * math.exp(-t / a), 0.0, 1.0)


def frechet_limit_part2(a: float, delta: float, eta: float) -> float:
    """``a E[eta**2 ^ (F/a)**(2/delta)]`` for standard Fréchet F.

    Split at the kink ``F = a eta**delta``. Below it, ``x = a s`` gives
    ``int_0^{eta**delta} s**(2/delta - 2) exp(-1/(a s)) ds``; above it,
    ``t = 1/x`` gives ``a eta**2 int_0^{1/(a eta**delta)} exp(-t) dt``.
    Tends to ``2 eta**(2 - delta) / (2 - delta)``.
    """
    if not a > 0 or not eta > 0:
        raise ValueError("a and eta must be positive")
    if not 1 < delta < 2:
        raise ValueError("part 2 needs 1 < delta < 2")
    alpha = 2.0 / delta - 2.0
    kink = eta ** delta
    cut = min(kink, 50.0 / a)
    # exp(-1/(a s)) switches on around s ~ 1/a: integrate that stretch with
    # the algebraic weight, the rest plainly
    def damp(s):
        return math.exp(-1.0 / (a * s)) if s > 0 else 0.0

    below = _quad(damp, 0.0, cut, weight="alg", wvar=(alpha, 0.0))
    if kink > cut:
        below += _quad(lambda s: s ** alpha * damp(s), cut, kink)
    above = a * eta ** 2 * _quad(lambda t: math.exp(-t), 0.0, 1.0 / (a * kink))
    return below + above


def estimate_mu(sample_count: int, seed: int, delta: float = 1.0,
                chunk: int = 1 << 20) -> tuple[float, float]:
    """Monte Carlo ``exp(E[log(2 F**delta)])`` and its delta-method standard error."""
    if sample_count < 10 ** 4:
        raise ValueError("need at least 10**4 samples")
    total = 0.0
    total_sq = 0.0
    done = 0
    layer = 0
    while done < sample_count:
        m = min(chunk, sample_count - done)
        g = math.log(2.0) + delta * np.log(frechet_draws(m, delta, seed, layer))
        total += float(g.sum())
        total_sq += float((g * g).sum())
        done += m
        layer += 1
    mean = total / sample_count
    var = max(total_sq / sample_count - mean * mean, 0.0)
    est = math.exp(mean)
    return est, est * math.sqrt(var / sample_count)
