"""Brute-force verifiers for the geometric lemmas behind the block estimates.

Three pointwise facts are certified by exhaustive randomized sampling with
explicit constants:

* separated-magnitude triples (one frequency at least 8x another) force the
  three-wave phase |xi1|^2 - |xi2|^2 - sigma |xi3|^2 to be of the size of
  the largest frequency squared;
* the sublevel set {x : |(x - M)^2 - N^2| <= L} has measure exactly
  2 (sqrt(N^2+L) - sqrt(N^2-L)) <= 4 L / N whenever N^2 >> L;
* two sector-separated directions (16 to 32 sectors apart out of A) cannot
  cancel: |xi1 + xi2| >= |xi1| / (4A).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "lemma_2_8_constant",
    "verify_lemma_2_8",
    "verify_lemma_3_5",
    "verify_lemma_3_8",
    "case_split_threshold",
    "SeparationReport",
    "SectorSumReport",
]

MAGNITUDE_RATIO = 8.0  # concrete reading of "much larger" for frequency sizes
_RATIO_SLACK = (8.0 / 9.0) ** 2  # max|xi_j| <= 9/8 of the regime's large frequency


def lemma_2_8_constant(sigma: float) -> float:
    """Explicit constant c_sigma with |phase| >= c_sigma * max |xi_j|^2 on bad triples.

    Derived from the quadratic-form expansions of the three-wave phase,

        phase = (1-sigma)|xi1|^2 - 2 sigma xi1.xi2 - (1+sigma)|xi2|^2
              = 2 xi2.xi3 + (1-sigma)|xi3|^2,

    one lower bound per separated regime (|xi1| >= 8|xi2|, |xi2| >= 8|xi1|,
    |xi3| >= 8|xi2|), then the minimum.  Degenerates (returns a value <= 0)
    as sigma approaches +-1, matching the lemma's exclusion of those values.
    """
    if sigma in (0.0, 1.0, -1.0):
        raise ValueError("sigma must avoid {0, +1, -1}")
    r = 1.0 / MAGNITUDE_RATIO
    c1 = abs(1 - sigma) - 2 * abs(sigma) * r - abs(1 + sigma) * r**2
    c2 = abs(1 + sigma) - 2 * abs(sigma) * r - abs(1 - sigma) * r**2
    c3 = abs(1 - sigma) - 2 * r
    return min(c1, c2, c3) * _RATIO_SLACK


@dataclass(frozen=True)
class SeparationReport:
    sigma: float
    d: int
    samples: int
    c_sigma: float
    c_small: float
    violations: int
    min_phase_ratio: float  # min over samples of |phase| / max|xi|^2

    @property
    def certified_modulation_bound(self) -> float:
        """Modulation ceiling below which separated triples are impossible."""
        return self.c_small * self.c_sigma


def verify_lemma_2_8(sigma: float, d: int, samples: int, c_small: float = 0.01,
                     seed: int = 0) -> SeparationReport:
    """Sample the three separated regimes and check |phase| >= c_sigma max|xi|^2.

    A clean pass certifies: whenever all three modulations stay below
    c_small * c_sigma * max|xi|^2, no frequency can exceed another by the
    factor 8 (the contrapositive of the sampled inequality).
    """
    if d not in (2, 3):
        raise ValueError("d must be 2 or 3")
    c_sigma = lemma_2_8_constant(sigma)
    if c_sigma <= 0:
        raise ValueError(
            f"the explicit constant degenerates at sigma={sigma}; "
            "separated regimes are only certified away from sigma = +-1"
        )
    rng = np.random.default_rng(seed)
    per_regime = samples // 3 + 1
    min_ratio = math.inf
    violations = 0

    def random_dirs(count):
        v = rng.standard_normal((count, d))
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    for regime in range(3):
        small_mag = np.exp(rng.uniform(0.0, math.log(1e3), per_regime))
        factor = MAGNITUDE_RATIO * np.exp(rng.uniform(0.0, math.log(10.0), per_regime))
        big_mag = small_mag * factor
        d_small, d_big = random_dirs(per_regime), random_dirs(per_regime)
        if regime == 0:  # |xi1| >= 8 |xi2|
            xi1 = big_mag[:, None] * d_big
            xi2 = small_mag[:, None] * d_small
            xi3 = -xi1 - xi2
        elif regime == 1:  # |xi2| >= 8 |xi1|
            xi2 = big_mag[:, None] * d_big
            xi1 = small_mag[:, None] * d_small
            xi3 = -xi1 - xi2
        else:  # |xi3| >= 8 |xi2|
            xi3 = big_mag[:, None] * d_big
            xi2 = small_mag[:, None] * d_small
            xi1 = -xi2 - xi3
        phase = np.abs(
            np.sum(xi1**2, axis=1) - np.sum(xi2**2, axis=1) - sigma * np.sum(xi3**2, axis=1)
        )
        max_sq = np.maximum(
            np.sum(xi1**2, axis=1), np.maximum(np.sum(xi2**2, axis=1), np.sum(xi3**2, axis=1))
        )
        ratio = phase / max_sq
        min_ratio = min(min_ratio, float(ratio.min()))
        violations += int(np.sum(ratio < c_sigma))

    return SeparationReport(
        sigma=sigma, d=d, samples=3 * per_regime, c_sigma=c_sigma, c_small=c_small,
        violations=violations, min_phase_ratio=min_ratio,
    )


def verify_lemma_3_5(m_shift: float, n_freq: float, l_mod: float) -> tuple[float, float]:
    """Exact measure of {x : |(x - M)^2 - N^2| <= L} against the 4 L / N bound.

    The set is two intervals with endpoints M +- sqrt(N^2 -+ L); its measure
    2 (sqrt(N^2+L) - sqrt(N^2-L)) is translation invariant in M.  Requires
    N^2 >= 64 L (the concrete reading of N^2 >> L).
    """
    if n_freq <= 0 or l_mod <= 0:
        raise ValueError("N and L must be positive")
    if n_freq**2 < 64.0 * l_mod:
        raise ValueError(f"need N^2 >= 64 L, got N^2={n_freq**2:g}, L={l_mod:g}")
    measure = 2.0 * (math.sqrt(n_freq**2 + l_mod) - math.sqrt(n_freq**2 - l_mod))
    bound = 4.0 * l_mod / n_freq
    if measure > bound:
        raise AssertionError(f"measure {measure:g} exceeds bound {bound:g}")
    return measure, bound


@dataclass(frozen=True)
class SectorSumReport:
    a_sectors: int
    samples: int
    violations: int
    min_sum_ratio: float  # min of |xi1+xi2| * 4A / |xi1|


def verify_lemma_3_8(a_sectors: int, samples: int, seed: int = 0) -> SectorSumReport:
    """Sector-separated pairs (16 <= |j1-j2| <= 32) satisfy |xi1+xi2| >= |xi1|/(4A).

    Magnitudes are sampled comparable (ratio in [1/2, 2]); directions range
    over the full width-4pi/A sector supports including antipodal branches.
    """
    if a_sectors < 64:
        raise ValueError("sector count must be at least 64")
    rng = np.random.default_rng(seed)
    min_ratio = math.inf
    violations = 0
    batch = 4096
    done = 0
    while done < samples:
        count = min(batch, samples - done)
        j1 = rng.integers(0, a_sectors, size=count)
        dj = rng.integers(16, 33, size=count) * rng.choice([-1, 1], size=count)
        j2 = j1 + dj
        keep = (j2 >= 0) & (j2 < a_sectors)
        j1, j2 = j1[keep], j2[keep]
        if j1.size == 0:
            continue
        r1 = np.exp(rng.uniform(0.0, math.log(100.0), j1.size))
        r2 = r1 * np.exp(rng.uniform(math.log(0.5), math.log(2.0), j1.size))
        half = 2.0 * math.pi / a_sectors  # full sector support, either antipodal branch
        th1 = (math.pi * j1 / a_sectors + rng.uniform(-half, half, j1.size)
               - math.pi * rng.integers(0, 2, j1.size))
        th2 = (math.pi * j2 / a_sectors + rng.uniform(-half, half, j2.size)
               - math.pi * rng.integers(0, 2, j2.size))
        xi1 = np.stack([r1 * np.cos(th1), r1 * np.sin(th1)], axis=1)
        xi2 = np.stack([r2 * np.cos(th2), r2 * np.sin(th2)], axis=1)
        mag_sum = np.hypot(*(xi1 + xi2).T)
        ratio = mag_sum * (4.0 * a_sectors) / r1
        min_ratio = min(min_ratio, float(ratio.min()))
        violations += int(np.sum(ratio < 1.0))
        done += j1.size
    return SectorSumReport(
        a_sectors=a_sectors, samples=done, violations=violations, min_sum_ratio=min_ratio
    )


def case_split_threshold(l_max: float, n1: float, n3: float) -> float:
    """Sector-count threshold M = L_max^{-3/4} N1^{3/2} N3^{-1/2} splitting the
    nearly-parallel and transversal interaction regimes."""
    return l_max ** (-0.75) * n1**1.5 / math.sqrt(n3)
