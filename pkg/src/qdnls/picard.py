"""Duhamel integral operator and the Picard iterate hierarchy (d = 1).

The integral form of the system generates iterates

    u1 = free evolution of u0 (dispersion alpha), likewise v1, w1,
    uk = i  * sum_{k1+k2=k} I_alpha( dx(w_{k1}) * v_{k2} ),
    vk = i  * sum_{k1+k2=k} I_beta ( dx(conj w_{k1}) * u_{k2} ),
    wk = -i * sum_{k1+k2=k} I_gamma( dx( u_{k1} * conj v_{k2} ) ),

where I_sigma(f)(t) = int_0^t exp(i(t-t') sigma dx^2) f(t') dt'.  The generic
path evaluates I_sigma by Gauss-Legendre quadrature in time.  For the special
v0 = 0 data family the third u-iterate collapses to an explicit double sum
over frequency pairs whose nested time integrals have closed forms; that exact
kernel is what the norm-inflation experiments evaluate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .coeffs import Coefficients, phase_phi
from .spectral import (
    SpectralField,
    dealias,
    derivative,
    forward_transform,
    free_propagate,
    inverse_transform,
)

__all__ = [
    "PicardTerm",
    "FrequencyProfile",
    "gauss_legendre_nodes",
    "duhamel",
    "picard_terms",
    "double_phase_integral",
    "exp_integral",
    "third_iterate_kernel",
    "third_iterate_profile",
]

SMALL_PHASE = 1e-4
_TAYLOR_TERMS = 6


def gauss_legendre_nodes(count: int, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, t]."""
    if count < 1:
        raise ValueError("node count must be positive")
    x, w = np.polynomial.legendre.leggauss(count)
    return 0.5 * t * (x + 1.0), 0.5 * t * w


def duhamel(sigma: float, forcing: Sequence[SpectralField], t: float) -> SpectralField:
    """Quadrature approximation of int_0^t exp(i(t-t') sigma dx^2) f(t') dt'.

    ``forcing`` holds f sampled at the Gauss-Legendre nodes of [0, t]
    (node count = len(forcing)).
    """
    if len(forcing) == 0:
        raise ValueError("forcing sequence must not be empty")
    if t < 0:
        raise ValueError("t must be nonnegative")
    nodes, weights = gauss_legendre_nodes(len(forcing), t)
    grid = forcing[0].grid
    acc = np.zeros(grid.field_shape(), dtype=complex)
    for tau, w, f in zip(nodes, weights, forcing):
        if f.grid != grid:
            raise ValueError("forcing fields must share one grid")
        acc += w * free_propagate(f, sigma, t - tau).coeffs
    return SpectralField(grid, acc)


@dataclass(frozen=True)
class PicardTerm:
    """One iterate: order k, role in {u, v, w}, field at the given time."""

    order: int
    role: str
    field: SpectralField
    time: float


def _conj_field(f: SpectralField) -> SpectralField:
    return forward_transform(f.grid, np.conj(inverse_transform(f)))


def _product(a: SpectralField, b: SpectralField) -> SpectralField:
    return dealias(forward_transform(a.grid, inverse_transform(a) * inverse_transform(b)))


def picard_terms(
    c: Coefficients,
    u0: SpectralField,
    v0: SpectralField,
    w0: SpectralField,
    k_max: int,
    t: float,
    nodes: int = 16,
) -> list[PicardTerm]:
    """All iterates of order <= k_max at time t (one-dimensional fields only).

    With v0 = 0 the recursion forces v1 = u2 = w2 = v3 = 0; that chain is
    asserted numerically and the corresponding terms are returned exactly zero.
    """
    grid = u0.grid
    if not (v0.grid == grid and w0.grid == grid):
        raise ValueError("initial fields must share one grid")
    if grid.dim != 1:
        raise ValueError("picard iterates are implemented for dim = 1 only")
    if not 1 <= k_max <= 4:
        raise ValueError("k_max must be in 1..4 (cost grows combinatorially)")
    if t < 0:
        raise ValueError("t must be nonnegative")

    coef = {"u": c.alpha, "v": c.beta, "w": c.gamma}
    data = {"u": u0, "v": v0, "w": w0}
    memo: dict[tuple[str, int, float], SpectralField] = {}

    def iterate(role: str, k: int, time: float) -> SpectralField:
        key = (role, k, time)
        if key in memo:
            return memo[key]
        if k == 1:
            out = free_propagate(data[role], coef[role], time)
        else:
            taus, _ = gauss_legendre_nodes(nodes, time)
            acc = np.zeros(grid.field_shape(), dtype=complex)
            for k1 in range(1, k):
                k2 = k - k1
                samples = []
                for tau in taus:
                    if role == "u":
                        f = _product(derivative(iterate("w", k1, tau)), iterate("v", k2, tau))
                    elif role == "v":
                        f = _product(
                            derivative(_conj_field(iterate("w", k1, tau))), iterate("u", k2, tau)
                        )
                    else:
                        f = derivative(
                            _product(iterate("u", k1, tau), _conj_field(iterate("v", k2, tau)))
                        )
                    samples.append(f)
                acc += duhamel(coef[role], samples, time).coeffs
            sign = -1j if role == "w" else 1j
            out = SpectralField(grid, sign * acc)
        memo[key] = out
        return out

    terms = [
        PicardTerm(order=k, role=role, field=iterate(role, k, t), time=t)
        for k in range(1, k_max + 1)
        for role in ("u", "v", "w")
    ]

    scale = max(np.max(np.abs(f.coeffs)) for f in data.values())
    if np.max(np.abs(v0.coeffs)) == 0.0 and scale > 0:
        vanishing = {("v", 1), ("u", 2), ("w", 2), ("v", 3)}
        cleaned = []
        for term in terms:
            if (term.role, term.order) in vanishing:
                peak = np.max(np.abs(term.field.coeffs))
                if peak >= 1e-14 * scale:
                    raise RuntimeError(
                        f"vanishing chain violated: {term.role}{term.order} has peak {peak:g}"
                    )
                term = PicardTerm(term.order, term.role, term.field.with_coeffs(
                    np.zeros_like(term.field.coeffs)), term.time)
            cleaned.append(term)
        terms = cleaned
    return terms


_MOMENT_SERIES_RADIUS = 2.0  # below this |t*theta| the upward recursion is unstable
_MOMENT_SERIES_TERMS = 24  # truncation error 2^24/25! ~ 1e-18 at the radius


def _exp_moments(t: float, theta: np.ndarray, m_max: int) -> np.ndarray:
    """Moment integrals E_m = int_0^t s^m exp(i theta s) ds for m = 0..m_max.

    The closed-form upward recursion E_m = (t^m e^{i t theta} - m E_{m-1}) /
    (i theta) amplifies rounding by roughly (m+1)/|t theta| per step, so it
    is used only for |t theta| >= 2; below that a long power series carries
    every moment to full precision.
    """
    theta = np.asarray(theta, dtype=float)
    x = t * theta
    small = np.abs(x) < _MOMENT_SERIES_RADIUS
    safe = np.where(small, 1.0, theta)
    out = np.empty((m_max + 1,) + theta.shape, dtype=complex)
    phase = np.exp(1j * x)
    out[0] = (phase - 1.0) / (1j * safe)
    for m in range(1, m_max + 1):
        out[m] = (t**m * phase - m * out[m - 1]) / (1j * safe)
    if np.any(small):
        ix = np.where(small, 1j * x, 0.0)
        for m in range(m_max + 1):
            # E_m = t^{m+1} sum_n (i t theta)^n / (n! (m+n+1))
            term = np.ones(theta.shape, dtype=complex)
            acc = term / (m + 1)
            for n in range(1, _MOMENT_SERIES_TERMS):
                term = term * ix / n
                acc += term / (m + n + 1)
            out[m] = np.where(small, t ** (m + 1) * acc, out[m])
    return out


def exp_integral(t: float, theta) -> np.ndarray:
    """Elementary integral int_0^t exp(i theta s) ds = (exp(i t theta)-1)/(i theta)."""
    return _exp_moments(t, np.asarray(theta, dtype=float), 0)[0]


def double_phase_integral(t: float, phi1, phi2, include_first: bool = True,
                          include_second: bool = True) -> np.ndarray:
    """Nested oscillatory integral int_0^t e^{i s phi1} int_0^s e^{-i r phi2} dr ds.

    Expanding the inner integral gives two elementary pieces,

        K = [ E(t, phi1 - phi2) - E(t, phi1) ] / (-i phi2)
          = [ E(t, phi1) - E(t, phi1 - phi2) ] / (i phi2),

    evaluated in closed form; a Taylor branch handles |t*phi2| below 1e-4
    (resonant denominators).  ``include_first``/``include_second`` switch the
    E(t, phi1 - phi2) and E(t, phi1) contributions on and off individually so
    the two interaction mechanisms can be measured separately.
    """
    phi1 = np.asarray(phi1, dtype=float)
    phi2 = np.asarray(phi2, dtype=float)
    phi1, phi2 = np.broadcast_arrays(phi1, phi2)
    x2 = t * phi2
    small = np.abs(x2) < SMALL_PHASE
    safe = np.where(small, 1.0, phi2)

    term_psi = exp_integral(t, phi1 - phi2) if include_first else 0.0
    term_phi1 = exp_integral(t, phi1) if include_second else 0.0
    generic = (term_phi1 - term_psi) / (1j * safe)

    if np.any(small):
        if not (include_first and include_second):
            # the individual pieces carry a genuine 1/phi2 pole; only their
            # combination stays regular at resonance
            raise ValueError("split kernel evaluation requested at a resonant phase")
        # K = sum_n (-i phi2)^n / (n+1)! * E_{n+1}(t, phi1)
        moments = _exp_moments(t, phi1, _TAYLOR_TERMS)
        series = np.zeros(phi1.shape, dtype=complex)
        for n in range(_TAYLOR_TERMS):
            series += (-1j * phi2) ** n / math.factorial(n + 1) * moments[n + 1]
        generic = np.where(small, series, generic)
    return generic


@dataclass(frozen=True)
class FrequencyProfile:
    """Complex amplitudes on a compact window of an evenly spaced frequency lattice."""

    dxi: float
    index: np.ndarray  # integer lattice indices; xi = index * dxi
    amp: np.ndarray  # complex amplitudes, same length

    def __post_init__(self) -> None:
        if self.index.shape != self.amp.shape or self.index.ndim != 1:
            raise ValueError("index and amp must be matching 1-d arrays")

    @property
    def xi(self) -> np.ndarray:
        return self.index * self.dxi

    @staticmethod
    def from_indicator(dxi: float, lo: float, hi: float, value: complex) -> "FrequencyProfile":
        """Constant amplitude on the lattice points of the half-open interval [lo, hi).

        The half-open realization gives the discrete indicator measure
        exactly hi - lo at every lattice spacing, so refining the lattice
        leaves integral quantities nearly unchanged.
        """
        i0 = int(np.ceil(lo / dxi - 1e-12))
        i1 = int(np.floor(hi / dxi + 1e-12))
        if i1 * dxi >= hi - 1e-12 * max(1.0, abs(hi)):
            i1 -= 1
        idx = np.arange(i0, i1 + 1, dtype=np.int64)
        return FrequencyProfile(dxi, idx, np.full(idx.shape, value, dtype=complex))

    def sobolev_norm(self, s: float) -> float:
        weight = (1.0 + self.xi**2) ** s
        return float(np.sqrt(np.sum(weight * np.abs(self.amp) ** 2) * self.dxi))


def third_iterate_profile(
    c: Coefficients,
    u0hat: FrequencyProfile,
    w0hat: FrequencyProfile,
    t: float,
    include_first: bool = True,
    include_second: bool = True,
) -> FrequencyProfile:
    """Exact third u-iterate for v0 = 0 data, on the full reachable output window.

    Direct double sum over frequency pairs (xi1, xi2) in the support of
    w0hat, with u0hat evaluated at xi - xi1 + xi2 and the nested time
    integrals in closed form:

        u3hat(t, xi) = -exp(-i t alpha xi^2) * (dxi/(2 pi))^2 *
            sum_{xi1, xi2} K(t; phi(xi, xi1), phi(xi-xi1+xi2, xi2))
                           * xi1 xi2 * w0hat(xi1) conj(w0hat(xi2)) u0hat(xi-xi1+xi2)

    The (dxi/(2 pi))^2 weight is the Riemann-sum measure of the two
    convolution integrals under this package's transform convention.
    """
    if u0hat.dxi != w0hat.dxi:
        raise ValueError("profiles must share one lattice spacing")
    dxi = u0hat.dxi
    # output support: xi = m_u + m1 - m2 over support indices
    m1 = w0hat.index
    out_lo = u0hat.index.min() + m1.min() - m1.max()
    out_hi = u0hat.index.max() + m1.max() - m1.min()
    out_index = np.arange(out_lo, out_hi + 1, dtype=np.int64)

    u_amp = {int(m): a for m, a in zip(u0hat.index, u0hat.amp)}
    xi1 = w0hat.xi[:, None]
    xi2 = w0hat.xi[None, :]
    w_pair = (xi1 * w0hat.amp[:, None]) * (xi2 * np.conj(w0hat.amp)[None, :])

    amps = np.zeros(out_index.shape, dtype=complex)
    for pos, m in enumerate(out_index):
        xi = m * dxi
        mu_idx = m - m1[:, None] + m1[None, :]  # index of the u0 argument
        u_vals = np.array(
            [[u_amp.get(int(mi), 0.0) for mi in row] for row in mu_idx], dtype=complex
        )
        if not np.any(u_vals):
            continue
        phi1 = phase_phi(c, xi, xi1)
        phi2 = phase_phi(c, xi - xi1 + xi2, xi2)
        kern = double_phase_integral(
            t, np.broadcast_to(phi1, phi2.shape), phi2,
            include_first=include_first, include_second=include_second,
        )
        total = np.sum(kern * w_pair * u_vals)
        amps[pos] = -np.exp(-1j * t * c.alpha * xi**2) * (dxi / (2 * np.pi)) ** 2 * total
    return FrequencyProfile(dxi, out_index, amps)


def third_iterate_kernel(
    c: Coefficients,
    u0hat: FrequencyProfile,
    w0hat: FrequencyProfile,
    t: float,
    xi: float,
) -> complex:
    """Third u-iterate coefficient at a single output frequency (v0 = 0 data)."""
    profile = third_iterate_profile(c, u0hat, w0hat, t)
    m = int(round(xi / profile.dxi))
    if abs(m * profile.dxi - xi) > 1e-9 * max(1.0, abs(xi)):
        raise ValueError(f"xi={xi} is not on the lattice with spacing {profile.dxi}")
    hit = np.nonzero(profile.index == m)[0]
    return complex(profile.amp[hit[0]]) if hit.size else 0.0
