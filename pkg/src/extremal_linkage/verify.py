"""Property battery run by ``--cmd verify``.

Each check returns a :class:`Check`; ``scale`` shrinks the sample budgets for
quick runs (1.0 is the full budget).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .coalescence import step_offset_moments
from .degree import excursion_counts
from .fitness import MU, frechet_draws, scope
from .seeds import derive_seed
from .stats import estimate_mu, frechet_limit_part1, frechet_limit_part2, ks_distance


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def max_stability(m: int, delta: float, draws: int, seed: int) -> float:
    """KS distance between max of m fitnesses and m**(1/delta) times one fitness."""
    block = frechet_draws(draws * m, delta, derive_seed(seed, 1)).reshape(draws, m).max(axis=1)
    scaled = m ** (1.0 / delta) * frechet_draws(draws, delta, derive_seed(seed, 2))
    return ks_distance(block, scaled)


def excursion_chi2(count: int, seed: int, m_max: int = 20):
    """Chi-square of R against P(R = m) = 1/m - 1/(m+1), pooling R >= m_max."""
    _, right = excursion_counts(count, seed)
    obs = np.array([np.count_nonzero(right == m) for m in range(1, m_max)]
                   + [np.count_nonzero(right >= m_max)], dtype=float)
    probs = np.array([1.0 / m - 1.0 / (m + 1) for m in range(1, m_max)] + [1.0 / m_max])
    res = sps.chisquare(obs, probs * count)
    return float(res.statistic), float(res.pvalue)


def step_variance_error(f: float, samples: int, seed: int) -> float:
    phi = scope(f)
    _, var = step_offset_moments(f, samples, seed)
    return var / ((phi ** 2 - 1) / 12.0) - 1.0


def run_battery(seed: int = 2024, scale: float = 1.0) -> list[Check]:
    out = []
    draws = max(int(1e5 * scale), 2000)
    for m in (2, 10, 100):
        for delta in (0.5, 1.0, 3.0):
            d = max_stability(m, delta, draws, seed)
            tol = 0.01 if scale >= 1 else 1.63 * math.sqrt(2.0 / draws)
            out.append(Check(f"max-stability m={m} delta={delta}", d < tol,
                             f"KS={d:.4f} < {tol:.4f}"))
    count = max(int(1e6 * scale), 10 ** 4)
    chi2, p = excursion_chi2(count, seed)
    out.append(Check("excursion law P(R>=m)=1/m", p >= 0.01, f"chi2={chi2:.2f} p={p:.3f}"))
    for f in (0.5, 1.5, 9.5):
        err = step_variance_error(f, max(int(1e5 * scale), 10 ** 4), seed)
        out.append(Check(f"step variance phi={scope(f)}", abs(err) < 0.05,
                         f"relative error {err:+.4f}"))
    for delta in (1.5, 3.0):
        v = frechet_limit_part1(1e6, delta)
        out.append(Check(f"Frechet limit part 1 delta={delta}", abs(v - 1 / (delta + 1)) < 1e-3,
                         f"{v:.6f} vs {1 / (delta + 1):.6f}"))
    for delta, eta in ((1.5, 1.0), (1.5, 0.5)):
        v = frechet_limit_part2(1e8, delta, eta)
        target = 2 * eta ** (2 - delta) / (2 - delta)
        out.append(Check(f"Frechet limit part 2 delta={delta} eta={eta}", abs(v - target) < 5e-2,
                         f"{v:.5f} vs {target:.5f}"))
    est, se = estimate_mu(max(int(1e6 * scale), 10 ** 4), seed)
    out.append(Check("mu estimate", abs(est / MU - 1) < 0.01 and abs(est - MU) < 4 * se,
                     f"{est:.5f} +- {se:.5f} vs {MU:.5f}"))
    return out
