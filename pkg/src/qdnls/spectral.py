"""Periodic-grid spectral representation of the unknown fields.

Fields live on a d-dimensional torus (d = 1 or 2) sampled on n points per
axis and are stored by their Fourier coefficients.  The transform pair is
the Riemann-sum approximation of the continuum transform,

    forward:  F(xi) = sum_j f(x_j) exp(-i x_j xi) * (length/n)^d
    inverse:  f(x_j) = (2*pi)^{-d} * sum_m F(xi_m) exp(i x_j xi_m) * dxi^d

with dxi = 2*pi/length, so coefficients converge to continuum Fourier-integral
values as the grid refines.  Function-space norms are computed on the Fourier
side with plain measure dxi^d (the Sobolev weight <xi>^s applied to F); under
this convention the physical-sample l2 norm equals the spectral l2 norm
divided by (2*pi)^{d/2}.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "Grid",
    "SpectralField",
    "SystemState",
    "forward_transform",
    "inverse_transform",
    "free_propagate",
    "derivative",
    "sobolev_norm",
    "l2_norm",
    "dyadic_project",
    "dyadic_levels",
    "dealias",
    "dealias_mask",
    "random_band_limited_field",
    "write_snapshot",
    "read_snapshot",
]

SNAPSHOT_HEADER = struct.Struct("<iidid")  # dim, n, length, components, time


@dataclass(frozen=True)
class Grid:
    """Periodic grid: dim in {1,2}, n points per axis (power of two), period length."""

    dim: int
    n: int
    length: float

    def __post_init__(self) -> None:
        if self.dim not in (1, 2):
            raise ValueError(f"grid dim must be 1 or 2, got {self.dim}")
        if self.n < 8 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"points per axis must be a power of two >= 8, got {self.n}")
        if not (self.length > 0):
            raise ValueError(f"period must be positive, got {self.length}")

    @property
    def dxi(self) -> float:
        return 2.0 * np.pi / self.length

    @property
    def dx(self) -> float:
        return self.length / self.n

    def x_1d(self) -> np.ndarray:
        return np.arange(self.n) * self.dx

    def xi_1d(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    def spatial_shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    def field_shape(self) -> tuple[int, ...]:
        return (self.dim,) + self.spatial_shape()


@lru_cache(maxsize=64)
def _xi_squared(grid: Grid) -> np.ndarray:
    xi = grid.xi_1d()
    if grid.dim == 1:
        return xi**2
    return xi[:, None] ** 2 + xi[None, :] ** 2


@lru_cache(maxsize=64)
def _xi_axis(grid: Grid, axis: int) -> np.ndarray:
    xi = grid.xi_1d()
    if grid.dim == 1:
        return xi
    return xi[:, None] * np.ones(grid.n) if axis == 0 else np.ones(grid.n)[:, None] * xi


@lru_cache(maxsize=64)
def _derivative_multiplier(grid: Grid, axis: int) -> np.ndarray:
    # Nyquist mode has no conjugate partner; zeroing it keeps real fields real.
    mult = 1j * _xi_axis(grid, axis)
    idx = np.fft.fftfreq(grid.n) * grid.n
    nyquist = idx == -grid.n // 2
    if grid.dim == 1:
        mult = np.where(nyquist, 0.0, mult)
    else:
        mask = nyquist[:, None] if axis == 0 else nyquist[None, :]
        mult = np.where(mask, 0.0, mult)
    return mult


@lru_cache(maxsize=64)
def dealias_mask(grid: Grid) -> np.ndarray:
    """Two-thirds-rule mask: True where every |frequency index| <= n/3."""
    idx = np.abs(np.fft.fftfreq(grid.n) * grid.n)
    keep = idx <= grid.n / 3.0
    if grid.dim == 1:
        return keep
    return keep[:, None] & keep[None, :]


@dataclass(frozen=True)
class SpectralField:
    """Vector-valued field stored by Fourier coefficients, shape (dim, n[, n])."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        expected = self.grid.field_shape()
        if self.coeffs.shape != expected:
            raise ValueError(f"coefficient shape {self.coeffs.shape} != expected {expected}")
        if not np.all(np.isfinite(self.coeffs.view(float))):
            raise ValueError("coefficients must be finite")

    @property
    def components(self) -> int:
        return self.grid.dim

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, np.ascontiguousarray(coeffs, dtype=complex))

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy())


def zero_field(grid: Grid) -> SpectralField:
    return SpectralField(grid, np.zeros(grid.field_shape(), dtype=complex))


def forward_transform(grid: Grid, samples: np.ndarray) -> SpectralField:
    """Physical samples (dim, n[, n]) -> spectral field under the stated convention."""
    samples = np.asarray(samples, dtype=complex)
    if samples.shape != grid.field_shape():
        raise ValueError(f"sample shape {samples.shape} != expected {grid.field_shape()}")
    axes = tuple(range(1, grid.dim + 1))
    coeffs = np.fft.fftn(samples, axes=axes) * grid.dx**grid.dim
    return SpectralField(grid, coeffs)


def inverse_transform(f: SpectralField) -> np.ndarray:
    """Spectral field -> physical samples (exact inverse of forward_transform)."""
    grid = f.grid
    axes = tuple(range(1, grid.dim + 1))
    return np.fft.ifftn(f.coeffs, axes=axes) / grid.dx**grid.dim


def free_propagate(f: SpectralField, sigma: float, t: float) -> SpectralField:
    """Apply the free Schrodinger group: multiply by exp(-i*t*sigma*|xi|^2)."""
    phase = np.exp(-1j * t * sigma * _xi_squared(f.grid))
    return f.with_coeffs(f.coeffs * phase)


def derivative(f: SpectralField, axis: int = 0) -> SpectralField:
    """Partial derivative along the given spatial axis (Fourier multiplier i*xi)."""
    if not 0 <= axis < f.grid.dim:
        raise ValueError(f"axis {axis} out of range for dim {f.grid.dim}")
    return f.with_coeffs(f.coeffs * _derivative_multiplier(f.grid, axis))


def sobolev_norm(f: SpectralField, s: float) -> float:
    """H^s norm: (sum over components and modes of <xi>^{2s} |F|^2 dxi^d)^{1/2}."""
    weight = (1.0 + _xi_squared(f.grid)) ** s
    total = np.sum(weight * np.abs(f.coeffs) ** 2)
    return float(np.sqrt(total * f.grid.dxi**f.grid.dim))


def l2_norm(f: SpectralField) -> float:
    return sobolev_norm(f, 0.0)


def homogeneous_norm(f: SpectralField, s: float) -> float:
    """Homogeneous norm with weight |xi|^{2s}; the zero mode is dropped."""
    xi2 = _xi_squared(f.grid)
    weight = np.where(xi2 > 0, xi2, 1.0) ** s
    mass = np.abs(f.coeffs) ** 2
    mass = np.where(xi2 > 0, mass, 0.0)
    return float(np.sqrt(np.sum(weight * mass) * f.grid.dxi**f.grid.dim))


def _dyadic_level_index(grid: Grid) -> np.ndarray:
    """Per-mode dyadic level: 0 for |xi| < 2, k for |xi| in [2^k, 2^{k+1})."""
    mag = np.sqrt(_xi_squared(grid))
    level = np.zeros(mag.shape, dtype=int)
    positive = mag >= 2.0
    level[positive] = np.floor(np.log2(mag[positive])).astype(int)
    return level


def dyadic_levels(grid: Grid) -> list[int]:
    """Dyadic block sizes N = 2^k present on the grid, ascending."""
    levels = np.unique(_dyadic_level_index(grid))
    return [int(2**k) for k in levels]


def dyadic_project(f: SpectralField, n_block: int) -> SpectralField:
    """Sharp dyadic projection: keep |xi| in [N, 2N) (N >= 2) or |xi| < 2 (N = 1).

    Over all N the projections partition every mode exactly once, so they
    sum back to the identity bit-exactly.
    """
    if n_block < 1 or (n_block & (n_block - 1)) != 0:
        raise ValueError(f"dyadic block must be a power of two >= 1, got {n_block}")
    level = _dyadic_level_index(f.grid)
    mask = level == int(np.log2(n_block))
    return f.with_coeffs(np.where(mask, f.coeffs, 0.0))


def dealias(f: SpectralField) -> SpectralField:
    """Two-thirds rule: zero every mode with any |frequency index| > n/3."""
    return f.with_coeffs(np.where(dealias_mask(f.grid), f.coeffs, 0.0))


def random_band_limited_field(grid: Grid, rng: np.random.Generator, max_index: int,
                              amplitude: float = 1.0, decay: float = 0.0) -> SpectralField:
    """Random complex field supported on |frequency index| <= max_index per axis.

    Coefficients are complex Gaussians damped by <xi>^{-decay}, then scaled so
    the field's L^2 norm equals ``amplitude``.
    """
    shape = grid.field_shape()
    coeffs = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    idx = np.abs(np.fft.fftfreq(grid.n) * grid.n)
    keep = idx <= max_index
    mask = keep if grid.dim == 1 else keep[:, None] & keep[None, :]
    coeffs = np.where(mask, coeffs, 0.0)
    if decay != 0.0:
        coeffs = coeffs * (1.0 + _xi_squared(grid)) ** (-decay / 2.0)
    f = SpectralField(grid, coeffs)
    norm = l2_norm(f)
    if norm > 0:
        f = f.with_coeffs(f.coeffs * (amplitude / norm))
    return f


@dataclass(frozen=True)
class SystemState:
    """The field triple (u, v, w) on a common grid at a common time."""

    u: SpectralField
    v: SpectralField
    w: SpectralField
    time: float = 0.0

    def __post_init__(self) -> None:
        if not (self.u.grid == self.v.grid == self.w.grid):
            raise ValueError("u, v, w must share one grid")

    @property
    def grid(self) -> Grid:
        return self.u.grid

    def map_fields(self, fn) -> "SystemState":
        return SystemState(fn(self.u), fn(self.v), fn(self.w), self.time)


def write_snapshot(f: SpectralField, path, time: float = 0.0) -> None:
    """Binary snapshot: little-endian header + interleaved complex64 coefficients."""
    header = SNAPSHOT_HEADER.pack(f.grid.dim, f.grid.n, f.grid.length, f.components, time)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(f.coeffs, dtype=np.complex64).tobytes())


def read_snapshot(path) -> tuple[SpectralField, float]:
    with open(path, "rb") as fh:
        raw = fh.read(SNAPSHOT_HEADER.size)
        dim, n, length, components, time = SNAPSHOT_HEADER.unpack(raw)
        grid = Grid(dim=dim, n=n, length=length)
        if components != grid.dim:
            raise ValueError(f"snapshot has {components} components, expected {grid.dim}")
        count = components * n**dim
        data = np.frombuffer(fh.read(count * 8), dtype=np.complex64, count=count)
    coeffs = data.astype(complex).reshape(grid.field_shape())
    return SpectralField(grid, coeffs), time
