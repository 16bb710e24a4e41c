"""Angular decomposition of the plane into A paired antipodal sectors.

A smooth partition of unity on the line, omega_j(s) = psi(s - j) normalized
by the sum over shifts, is wrapped onto directions via s = A * theta / pi.
Because s has period A under theta -> theta + pi, each weight identifies a
direction with its antipode; sector j covers the two arcs of width 4 pi / A
around the angles pi j / A and pi j / A - pi.  A disjoint family of sharp
tiles of width pi / A (same antipodal pairing) is kept alongside for
bit-exact reassembly masks.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "smooth_bump",
    "bump_shell",
    "angular_partition",
    "in_sector_support",
    "sector_tile_index",
    "sector_arc_angles",
]


def smooth_bump(t):
    """Even C^inf cutoff: 1 on [-1, 1], 0 outside (-2, 2), monotone between."""
    t = np.abs(np.asarray(t, dtype=float))
    x = 2.0 - t  # transition variable: >= 1 inside, <= 0 outside
    with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
        g = np.where(x > 0, np.exp(-1.0 / np.maximum(x, 1e-300)), 0.0)
        gc = np.where(1 - x > 0, np.exp(-1.0 / np.maximum(1 - x, 1e-300)), 0.0)
        out = g / (g + gc)
    return out if out.ndim else float(out)


def bump_shell(t):
    """psi(t) = bump(t) - bump(2t): supported in 1/2 <= |t| <= 2."""
    return smooth_bump(t) - smooth_bump(2.0 * np.asarray(t, dtype=float))


def _omega_raw(q: np.ndarray, s: np.ndarray) -> np.ndarray:
    return bump_shell(s - q)


def angular_partition(a_sectors: int, theta) -> np.ndarray:
    """Weights omega_j^A(theta) for j = 0..A-1; they sum to one exactly.

    ``theta`` may be a scalar or an array; the result has shape
    (A,) + shape(theta).  Each weight is pi-periodic in theta (antipodal
    identification) and supported in the width-4pi/A sector set of its index.
    """
    _check_sectors(a_sectors)
    theta = np.asarray(theta, dtype=float)
    s = a_sectors * theta / math.pi
    base = np.floor(s).astype(int)
    shifts = np.arange(-1, 3)  # integers q with |s - q| < 2
    q = base[None, ...] + shifts.reshape((4,) + (1,) * theta.ndim)
    vals = _omega_raw(q, s[None, ...])
    denom = np.sum(vals, axis=0)
    weights = np.zeros((a_sectors,) + theta.shape, dtype=float)
    j = np.mod(q, a_sectors)
    np.add.at(weights, (j,) + tuple(np.indices(theta.shape)[i] for i in range(theta.ndim)),
              vals / denom)
    return weights


def in_sector_support(a_sectors: int, j: int, theta) -> np.ndarray:
    """Membership in the width-4pi/A support set of sector j (antipodal pair of arcs)."""
    _check_sectors(a_sectors)
    theta = np.asarray(theta, dtype=float)
    s = a_sectors * theta / math.pi
    dist = np.mod(s - j, a_sectors)
    dist = np.minimum(dist, a_sectors - dist)
    out = dist < 2.0
    return out if out.ndim else bool(out)


def sector_tile_index(a_sectors: int, theta) -> np.ndarray:
    """Index of the disjoint width-pi/A tile containing the direction theta.

    The tiles partition directions exactly (antipodal identification), so
    masking by tile index and summing over j reassembles a function
    bit-exactly.
    """
    _check_sectors(a_sectors)
    theta = np.asarray(theta, dtype=float)
    s = a_sectors * theta / math.pi
    out = np.mod(np.floor(s + 0.5).astype(int), a_sectors)
    return out if out.ndim else int(out)


def sector_arc_angles(a_sectors: int, j: int, rng: np.random.Generator, count: int,
                      margin: float = 0.0) -> np.ndarray:
    """Random directions inside sector j's support set, either antipodal branch.

    ``margin`` shrinks the arc from its full half-width 2pi/A (margin = 0)
    towards the center; angles land in [-pi, pi).
    """
    _check_sectors(a_sectors)
    half = (2.0 - margin) * math.pi / a_sectors
    center = math.pi * j / a_sectors
    offsets = rng.uniform(-half, half, size=count)
    flip = rng.integers(0, 2, size=count).astype(bool)
    theta = center + offsets - np.where(flip, math.pi, 0.0)
    return np.mod(theta + math.pi, 2.0 * math.pi) - math.pi


def _check_sectors(a_sectors: int) -> None:
    if a_sectors < 64 or (a_sectors & (a_sectors - 1)) != 0:
        raise ValueError(f"sector count must be a dyadic integer >= 64, got {a_sectors}")
