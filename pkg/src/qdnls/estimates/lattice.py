"""Block-localized functions on a discrete (tau, xi) lattice and their products.

A block is the intersection of a dyadic spatial annulus |xi| ~ N, a dyadic
modulation shell |tau + sigma |xi|^2| ~ L, and optionally an angular sector.
Functions supported on such blocks are stored sparsely: a list of xi lattice
points, and for each a short contiguous tau window that covers the shell at
that xi.  The product of two block functions is the (tau, xi) convolution of
their coefficient arrays (Riemann-sum weights d tau * d xi^d per sum); its
restricted L^2 norms are what the sweep experiments measure.

The convolution kernel enumerates (output point, first-factor point) pairs
and accumulates the short tau-window outer products into a per-output-point
tau accumulator, so memory stays proportional to the modulation spread of a
single output frequency rather than the whole lattice.  The kernel is JIT
compiled (numba) and processes all random trials of a sweep point in one
pass over the index structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

try:
    from numba import config as _numba_config
    from numba import njit, prange

    _numba_config.THREADING_LAYER = "workqueue"  # TBB probe warns on this image
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    HAVE_NUMBA = False
    prange = range

    def njit(*args, **kwargs):
        def deco(fn):
            return fn

        return deco if not (args and callable(args[0])) else args[0]

from .angular import in_sector_support

__all__ = [
    "BlockSpec",
    "LatticeFunction",
    "synthesize_block",
    "block_l2_norm",
    "xsb_norm",
    "xsb_norm_dyadic",
    "block_product_norm",
    "dense_product_norm",
]


def _is_dyadic_int(x) -> bool:
    return isinstance(x, (int, np.integer)) and x >= 1 and (x & (x - 1)) == 0


@dataclass(frozen=True)
class BlockSpec:
    """Dyadic block: |xi| ~ n_block, |tau + sigma |xi|^2| ~ l_block, optional sector.

    ``sector`` is a pair (A, j): the function is confined to sector j of the
    width-4pi/A angular decomposition (A >= 64 dyadic).
    """

    n_block: int
    l_block: int
    sigma: float
    sector: Optional[tuple[int, int]] = None

    def __post_init__(self) -> None:
        if not _is_dyadic_int(self.n_block) or not _is_dyadic_int(self.l_block):
            raise ValueError("n_block and l_block must be dyadic integers >= 1")
        if self.sigma == 0.0:
            raise ValueError("sigma must be nonzero")
        if self.sector is not None:
            a_sectors, j = self.sector
            if not _is_dyadic_int(a_sectors) or a_sectors < 64:
                raise ValueError("sector count must be dyadic and >= 64")
            if not 0 <= j < a_sectors:
                raise ValueError(f"sector index {j} out of range for A={a_sectors}")


def _annulus_mask(n_block: int, mag: np.ndarray) -> np.ndarray:
    if n_block == 1:
        return mag < 2.0
    return (mag >= n_block) & (mag < 2 * n_block)


def _shell_mask(l_block: int, theta: np.ndarray) -> np.ndarray:
    mag = np.abs(theta)
    if l_block == 1:
        return mag < 2.0
    return (mag >= l_block) & (mag < 2 * l_block)


@dataclass(frozen=True)
class LatticeFunction:
    """Sparse block-supported function: per xi point, a short tau window.

    xi_idx:    (P, 2) integer lattice coordinates, xi = xi_idx * dxi
    tau_start: (P,) first tau index of each window, tau = index * dtau
    win:       (P, W) complex values; entries off the block support are zero
    """

    dtau: float
    dxi: float
    block: BlockSpec
    xi_idx: np.ndarray
    tau_start: np.ndarray
    win: np.ndarray

    def __post_init__(self) -> None:
        if self.xi_idx.ndim != 2 or self.xi_idx.shape[1] != 2:
            raise ValueError("xi_idx must have shape (P, 2)")
        if self.tau_start.shape != (self.xi_idx.shape[0],):
            raise ValueError("tau_start must have one entry per xi point")
        if self.win.shape[0] != self.xi_idx.shape[0]:
            raise ValueError("win must have one row per xi point")
        off = ~self._support_mask()
        if np.any(self.win[off] != 0):
            raise ValueError("values found outside the block support set")

    def _support_mask(self) -> np.ndarray:
        xi = self.xi_idx * self.dxi
        mag_sq = xi[:, 0] ** 2 + xi[:, 1] ** 2
        ok_xi = _annulus_mask(self.block.n_block, np.sqrt(mag_sq))
        if self.block.sector is not None:
            a_sectors, j = self.block.sector
            theta = np.arctan2(xi[:, 1], xi[:, 0])
            ok_xi &= in_sector_support(a_sectors, j, theta)
        taus = (self.tau_start[:, None] + np.arange(self.win.shape[1])[None, :]) * self.dtau
        theta_mod = taus + self.block.sigma * mag_sq[:, None]
        return ok_xi[:, None] & _shell_mask(self.block.l_block, theta_mod)

    @property
    def measure(self) -> float:
        return self.dtau * self.dxi**2

    def scaled(self, factor: complex) -> "LatticeFunction":
        return LatticeFunction(self.dtau, self.dxi, self.block, self.xi_idx,
                               self.tau_start, self.win * factor)


def block_support(spec: BlockSpec, dtau: float, dxi: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Support structure (xi_idx, tau_start, keep-mask) of a block on the lattice.

    Raises if the lattice does not resolve every active constraint with at
    least four points, or if the support is empty.
    """
    radial_width = 4.0 if spec.n_block == 1 else float(spec.n_block)
    if radial_width / dxi < 4 - 1e-9:
        raise ValueError(f"xi spacing {dxi} does not resolve the |xi| ~ {spec.n_block} annulus")
    shell_width = 4.0 if spec.l_block == 1 else float(spec.l_block)
    if shell_width / dtau < 4 - 1e-9:
        raise ValueError(f"tau spacing {dtau} does not resolve the modulation ~ {spec.l_block} shell")
    if spec.sector is not None:
        a_sectors, _ = spec.sector
        inner = 1.0 if spec.n_block == 1 else float(spec.n_block)
        if inner * 4 * math.pi / a_sectors < 4 * dxi - 1e-9:
            raise ValueError(
                f"xi spacing {dxi} does not resolve sectors of aperture 4pi/{a_sectors} "
                f"at radius {inner}"
            )

    r_max = int(math.floor(2 * spec.n_block / dxi)) + 1
    coords = np.arange(-r_max, r_max + 1)
    gx, gy = np.meshgrid(coords, coords, indexing="ij")
    xi_x, xi_y = gx * dxi, gy * dxi
    mag = np.sqrt(xi_x**2 + xi_y**2)
    keep = _annulus_mask(spec.n_block, mag)
    if spec.sector is not None:
        a_sectors, j = spec.sector
        keep &= in_sector_support(a_sectors, j, np.arctan2(xi_y, xi_x))
    xi_idx = np.stack([gx[keep], gy[keep]], axis=1).astype(np.int64)
    if xi_idx.shape[0] == 0:
        raise ValueError("block support holds no xi lattice points")

    mag_sq = (xi_idx[:, 0] * dxi) ** 2 + (xi_idx[:, 1] * dxi) ** 2
    center = -spec.sigma * mag_sq  # tau where the modulation vanishes
    width = 2.0 * shell_width / (2.0 if spec.l_block == 1 else 1.0)
    lo = center - 2.0 * spec.l_block if spec.l_block > 1 else center - 2.0
    width_pts = int(math.ceil(4.0 * spec.l_block / dtau)) + 2 if spec.l_block > 1 \
        else int(math.ceil(4.0 / dtau)) + 2
    tau_start = np.ceil(lo / dtau - 1e-9).astype(np.int64)
    taus = (tau_start[:, None] + np.arange(width_pts)[None, :]) * dtau
    theta = taus + spec.sigma * mag_sq[:, None]
    mask = _shell_mask(spec.l_block, theta)
    if not np.any(mask):
        raise ValueError("block support holds no (tau, xi) lattice points")
    return xi_idx, tau_start, mask


def synthesize_block(spec: BlockSpec, dtau: float, dxi: float,
                     rng,
                     patch: Optional[tuple[tuple[float, float], float]] = None) -> LatticeFunction:
    """Seeded complex-Gaussian trial function on the block, normalized to L^2 = 1.

    ``rng`` is a numpy Generator or a plain integer seed.  ``patch`` =
    ((cx, cy), size) additionally confines the support to the cube of the
    given side around (cx, cy); concentrated trials of this kind approach
    the extremal configurations of the transversal estimates, which
    spread-out Gaussian data badly under-attain.  An empty intersection
    falls back to the full block.
    """
    if isinstance(rng, (int, np.integer)):
        rng = np.random.Generator(np.random.PCG64(int(rng)))
    xi_idx, tau_start, mask = block_support(spec, dtau, dxi)
    if patch is not None:
        (cx, cy), size = patch
        keep = (np.abs(xi_idx[:, 0] * dxi - cx) <= size / 2) & (
            np.abs(xi_idx[:, 1] * dxi - cy) <= size / 2
        )
        keep &= np.any(mask, axis=1)
        if np.any(keep):
            xi_idx, tau_start, mask = xi_idx[keep], tau_start[keep], mask[keep]
    shape = mask.shape
    values = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * mask
    f = LatticeFunction(dtau, dxi, spec, xi_idx, tau_start, values)
    norm = block_l2_norm(f)
    return f.scaled(1.0 / norm)


def block_l2_norm(f: LatticeFunction) -> float:
    return float(np.sqrt(np.sum(np.abs(f.win) ** 2) * f.measure))


def _pointwise_weights(f: LatticeFunction, s: float, b: float, sigma: float):
    xi = f.xi_idx * f.dxi
    mag_sq = xi[:, 0] ** 2 + xi[:, 1] ** 2
    taus = (f.tau_start[:, None] + np.arange(f.win.shape[1])[None, :]) * f.dtau
    theta = taus + sigma * mag_sq[:, None]
    return (1.0 + mag_sq[:, None]) ** (s / 2.0), (1.0 + theta**2) ** (b / 2.0), mag_sq, theta


def xsb_norm(f: LatticeFunction, s: float, b: float, sigma: Optional[float] = None,
             check_dyadic_agreement: bool = True) -> float:
    """Space-time restriction norm: sqrt(sum <xi>^{2s} <tau+sigma|xi|^2>^{2b} |f|^2 measure).

    The dyadically block-summed form of the same norm must agree within a
    factor of 4 (weights inside a block vary by at most sqrt(5) per factor);
    this is asserted when ``check_dyadic_agreement`` holds, for the exponent
    range |s| <= 1, |b| <= 1/2 the sweeps use.
    """
    sigma = f.block.sigma if sigma is None else sigma
    w_xi, w_theta, _, _ = _pointwise_weights(f, s, b, sigma)
    total = float(np.sqrt(np.sum((w_xi * w_theta * np.abs(f.win)) ** 2) * f.measure))
    if check_dyadic_agreement and abs(s) <= 1.0 and abs(b) <= 0.5:
        dyadic = xsb_norm_dyadic(f, s, b, sigma)
        if total > 0 and not (0.25 * total <= dyadic <= 4.0 * total):
            raise AssertionError(
                f"dyadic-sum norm {dyadic:g} disagrees with weight form {total:g} beyond factor 4"
            )
    return total


def xsb_norm_dyadic(f: LatticeFunction, s: float, b: float,
                    sigma: Optional[float] = None) -> float:
    """Dyadic form (sum_N sum_L N^{2s} L^{2b} |Q_L P_N f|^2)^{1/2} with sharp blocks."""
    sigma = f.block.sigma if sigma is None else sigma
    _, _, mag_sq, theta = _pointwise_weights(f, s, b, sigma)
    mag = np.sqrt(mag_sq)[:, None] * np.ones_like(theta)
    n_level = np.where(mag < 2.0, 1.0, 2.0 ** np.floor(np.log2(np.maximum(mag, 1e-300))))
    t_abs = np.abs(theta)
    l_level = np.where(t_abs < 2.0, 1.0, 2.0 ** np.floor(np.log2(np.maximum(t_abs, 1e-300))))
    mass = np.abs(f.win) ** 2 * f.measure
    return float(np.sqrt(np.sum(n_level ** (2 * s) * l_level ** (2 * b) * mass)))


@njit(cache=True, parallel=True)
def _conv_restricted_sq(xi1, tst1, win1, lo1, hi1, grid2, g2_ox, g2_oy, tst2, win2,
                        out_xi, dtau, dxi, mask_mode, sigma3, l3):  # pragma: no cover
    """Per output point, the tau-masked squared convolution magnitudes.

    win1/win2 carry a leading trials axis; lo1/hi1 bound the nonzero columns
    of each win1 row.  Returns an (out points, trials) array of raw sums.
    mask_mode 0: no tau mask; 1: modulation shell |tau + sigma3 |xi|^2| ~ l3.
    Output rows are independent, so the outer loop runs in parallel without
    affecting the (deterministic) result.
    """
    trials = win1.shape[0]
    w1 = win1.shape[2]
    w2 = win2.shape[2]
    n_out = out_xi.shape[0]
    out = np.zeros((n_out, trials))
    nx2 = grid2.shape[0]
    ny2 = grid2.shape[1]
    for q in prange(n_out):
        ox = out_xi[q, 0]
        oy = out_xi[q, 1]
        tmin = np.int64(2**62)
        tmax = np.int64(-(2**62))
        hit = False
        for p1 in range(xi1.shape[0]):
            jx = ox - xi1[p1, 0] - g2_ox
            jy = oy - xi1[p1, 1] - g2_oy
            if 0 <= jx < nx2 and 0 <= jy < ny2:
                p2 = grid2[jx, jy]
                if p2 >= 0:
                    ssum = tst1[p1] + tst2[p2]
                    if ssum < tmin:
                        tmin = ssum
                    if ssum > tmax:
                        tmax = ssum
                    hit = True
        if not hit:
            continue
        ext = int(tmax - tmin) + w1 + w2 - 1
        acc = np.zeros((trials, ext), dtype=np.complex128)
        for p1 in range(xi1.shape[0]):
            jx = ox - xi1[p1, 0] - g2_ox
            jy = oy - xi1[p1, 1] - g2_oy
            if 0 <= jx < nx2 and 0 <= jy < ny2:
                p2 = grid2[jx, jy]
                if p2 >= 0:
                    base = int(tst1[p1] + tst2[p2] - tmin)
                    for tr in range(trials):
                        for a in range(lo1[p1], hi1[p1]):
                            v1 = win1[tr, p1, a]
                            if v1 == 0.0:
                                continue
                            for bb in range(w2):
                                v2 = win2[tr, p2, bb]
                                if v2 != 0.0:
                                    acc[tr, base + a + bb] += v1 * v2
        if mask_mode == 0:
            for tr in range(trials):
                for i in range(ext):
                    z = acc[tr, i]
                    out[q, tr] += z.real * z.real + z.imag * z.imag
        else:
            xi_sq = (ox * dxi) ** 2 + (oy * dxi) ** 2
            for i in range(ext):
                theta = (tmin + i) * dtau + sigma3 * xi_sq
                at = abs(theta)
                if l3 == 1:
                    ok = at < 2.0
                else:
                    ok = (at >= l3) and (at < 2 * l3)
                if ok:
                    for tr in range(trials):
                        z = acc[tr, i]
                        out[q, tr] += z.real * z.real + z.imag * z.imag
    return out


def _xi_lookup_grid(f: LatticeFunction) -> tuple[np.ndarray, int, int]:
    ox, oy = int(f.xi_idx[:, 0].min()), int(f.xi_idx[:, 1].min())
    nx = int(f.xi_idx[:, 0].max()) - ox + 1
    ny = int(f.xi_idx[:, 1].max()) - oy + 1
    grid = np.full((nx, ny), -1, dtype=np.int64)
    grid[f.xi_idx[:, 0] - ox, f.xi_idx[:, 1] - oy] = np.arange(f.xi_idx.shape[0])
    return grid, ox, oy


def _output_points(f1: LatticeFunction, f2: LatticeFunction, n_out: int,
                   sector: Optional[tuple[int, int]], dxi: float) -> np.ndarray:
    lo = f1.xi_idx.min(axis=0) + f2.xi_idx.min(axis=0)
    hi = f1.xi_idx.max(axis=0) + f2.xi_idx.max(axis=0)
    r_max = int(math.floor(2 * n_out / dxi)) + 1
    lo = np.maximum(lo, -r_max)
    hi = np.minimum(hi, r_max)
    if np.any(lo > hi):
        return np.zeros((0, 2), dtype=np.int64)
    xs = np.arange(lo[0], hi[0] + 1)
    ys = np.arange(lo[1], hi[1] + 1)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    mag = np.sqrt((gx * dxi) ** 2 + (gy * dxi) ** 2)
    keep = _annulus_mask(n_out, mag)
    if sector is not None:
        a_sectors, j = sector
        keep &= in_sector_support(a_sectors, j, np.arctan2(gy * dxi, gx * dxi))
    return np.stack([gx[keep], gy[keep]], axis=1).astype(np.int64)


def block_product_norm(
    f1: LatticeFunction,
    f2: LatticeFunction,
    n_out: int,
    out_modulation: Optional[tuple[float, int]] = None,
    out_sector: Optional[tuple[int, int]] = None,
) -> float:
    """L^2 norm of the (tau, xi) convolution f1 * f2 restricted to |xi| ~ n_out.

    ``out_modulation`` = (sigma3, L3) additionally restricts to the
    modulation shell |tau + sigma3 |xi|^2| ~ L3; ``out_sector`` = (A, j)
    restricts to an angular sector.  Equals the space-time L^2 norm of the
    frequency-projected pointwise product of the two underlying functions.
    """
    sums = block_product_norms_batch([f1], [f2], n_out, out_modulation, out_sector)
    return sums[0]


def block_product_norms_batch(
    fs1: list[LatticeFunction],
    fs2: list[LatticeFunction],
    n_out: int,
    out_modulation: Optional[tuple[float, int]] = None,
    out_sector: Optional[tuple[int, int]] = None,
) -> np.ndarray:
    """Batched block_product_norm over paired trials sharing one support structure."""
    if len(fs1) != len(fs2) or not fs1:
        raise ValueError("need matching nonempty trial lists")
    f1, f2 = fs1[0], fs2[0]
    if (f1.dtau, f1.dxi) != (f2.dtau, f2.dxi):
        raise ValueError("lattice spacings differ between factors")
    if not _is_dyadic_int(n_out):
        raise ValueError("output annulus must be dyadic")
    for g1, g2 in zip(fs1, fs2):
        if g1.win.shape != f1.win.shape or g2.win.shape != f2.win.shape:
            raise ValueError("all trials must share the support structure")

    out_xi = _output_points(f1, f2, n_out, out_sector, f1.dxi)
    if out_xi.shape[0] == 0:
        return np.zeros(len(fs1))
    grid2, ox2, oy2 = _xi_lookup_grid(f2)
    win1 = np.stack([g.win for g in fs1])
    win2 = np.stack([g.win for g in fs2])
    if out_modulation is None:
        mask_mode, sigma3, l3 = 0, 0.0, 1
    else:
        sigma3, l3 = out_modulation
        if not _is_dyadic_int(l3):
            raise ValueError("output modulation size must be dyadic")
        mask_mode = 1
    nonzero1 = np.any(win1 != 0, axis=0)  # same support across trials
    has = np.any(nonzero1, axis=1)
    lo1 = np.where(has, np.argmax(nonzero1, axis=1), 0).astype(np.int64)
    hi1 = np.where(
        has, win1.shape[2] - np.argmax(nonzero1[:, ::-1], axis=1), 0
    ).astype(np.int64)
    per_point = _conv_restricted_sq(
        f1.xi_idx, f1.tau_start.astype(np.int64), np.ascontiguousarray(win1), lo1, hi1,
        grid2, ox2, oy2, f2.tau_start.astype(np.int64), np.ascontiguousarray(win2),
        out_xi, f1.dtau, f1.dxi, mask_mode, float(sigma3), int(l3),
    )
    raw = per_point.sum(axis=0)
    m = f1.measure
    return np.sqrt(raw * m**2 * m)


def dense_product_norm(
    f1: LatticeFunction,
    f2: LatticeFunction,
    n_out: int,
    out_modulation: Optional[tuple[float, int]] = None,
    out_sector: Optional[tuple[int, int]] = None,
    max_points: int = 40_000_000,
) -> float:
    """Independent dense-FFT evaluation of block_product_norm (small lattices only).

    Materializes both factors on dense (tau, xi) boxes, forms the physical
    space-time product via FFTs (linear convolution through zero padding),
    masks, and measures.  Memory grows with the full modulation spread, so
    this is the small-lattice oracle, not the production path.
    """
    def bounds(f: LatticeFunction):
        t_lo = int(f.tau_start.min())
        t_hi = int((f.tau_start + f.win.shape[1] - 1).max())
        return (t_lo, t_hi, f.xi_idx[:, 0].min(), f.xi_idx[:, 0].max(),
                f.xi_idx[:, 1].min(), f.xi_idx[:, 1].max())

    def densify(f: LatticeFunction, b):
        t_lo, t_hi, x_lo, x_hi, y_lo, y_hi = b
        arr = np.zeros((t_hi - t_lo + 1, x_hi - x_lo + 1, y_hi - y_lo + 1), dtype=complex)
        for p in range(f.xi_idx.shape[0]):
            ts = int(f.tau_start[p]) - t_lo
            arr[ts:ts + f.win.shape[1], f.xi_idx[p, 0] - x_lo, f.xi_idx[p, 1] - y_lo] = f.win[p]
        return arr

    b1, b2 = bounds(f1), bounds(f2)
    a1, a2 = densify(f1, b1), densify(f2, b2)
    shape = tuple(s1 + s2 - 1 for s1, s2 in zip(a1.shape, a2.shape))
    if np.prod(shape) > max_points:
        raise ValueError("dense oracle limited to small lattices")
    axes = (0, 1, 2)
    fa = np.fft.fftn(a1, s=shape, axes=axes)
    fb = np.fft.fftn(a2, s=shape, axes=axes)
    conv = np.fft.ifftn(fa * fb, axes=axes)
    t0 = b1[0] + b2[0]
    x0 = b1[2] + b2[2]
    y0 = b1[4] + b2[4]
    taus = (t0 + np.arange(shape[0])) * f1.dtau
    xs = (x0 + np.arange(shape[1])) * f1.dxi
    ys = (y0 + np.arange(shape[2])) * f1.dxi
    mag_sq = xs[:, None] ** 2 + ys[None, :] ** 2
    mag = np.sqrt(mag_sq)
    keep = _annulus_mask(n_out, mag)
    if out_sector is not None:
        a_sectors, j = out_sector
        keep = keep & in_sector_support(a_sectors, j, np.arctan2(ys[None, :], xs[:, None]))
    mask3 = np.broadcast_to(keep[None, :, :], shape).copy()
    if out_modulation is not None:
        sigma3, l3 = out_modulation
        theta = taus[:, None, None] + sigma3 * mag_sq[None, :, :]
        mask3 &= _shell_mask(l3, theta)
    m = f1.measure
    return float(np.sqrt(np.sum(np.abs(conv[mask3]) ** 2) * m**2 * m))
