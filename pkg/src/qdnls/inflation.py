"""Third-iterate norm growth experiment for mu > 0, s < 0, d = 1.

For the data family

    u0hat = N^{-s} * indicator of [k N, k N + 1],   k = gamma/alpha,
    w0hat = N^{-s} * indicator of [N, N + 1],       v0 = 0,

both data have H^s norm of order one, yet the third Picard iterate of u
grows like t * N^{-2s}: the interaction phases satisfy

    |phase(xi - xi1 + xi2, xi2)| ~ |(alpha-gamma) mu| / alpha^2 * N^2,
    |phase(xi, xi1)| ~ N^2,       |mismatch Psi| = O(1) uniformly in N,

so the slowly rotating part of the iterate kernel accumulates linearly in
time while the oscillating remainder stays O(N^{-2}) relative.  Sweeping N
and fitting the log-log slope of the growth ratio against the prediction
-2s is the quantitative content this lab reproduces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coeffs import Coefficients, compute_mu, phase_phi, phase_psi
from .picard import FrequencyProfile, third_iterate_profile

__all__ = [
    "InflationConfig",
    "InflationRow",
    "InflationReport",
    "ModulationReport",
    "build_inflation_data",
    "check_modulation_conditions",
    "run_inflation",
    "fit_loglog_slope",
]

# enforced floor for t * N_min^2 (the "t much larger than N^-2" regime);
# the reference sweep (t = 0.1, N_min = 16) sits at 25.6
TIME_MARGIN = 25.0


def _is_dyadic(x: float) -> bool:
    return x > 0 and math.log2(x) == int(math.log2(x))


@dataclass(frozen=True)
class InflationConfig:
    c: Coefficients
    s: float
    n_list: tuple[float, ...]
    t: float
    delta_xi: float = 0.125

    def __post_init__(self) -> None:
        if compute_mu(self.c) <= 0:
            raise ValueError("inflation experiment requires mu > 0")
        if self.s >= 0:
            raise ValueError("inflation experiment requires s < 0")
        if self.delta_xi > 0.125 + 1e-12:
            raise ValueError("frequency spacing must be at most 1/8")
        if len(self.n_list) == 0 or any(not _is_dyadic(n) for n in self.n_list):
            raise ValueError("n_list must hold dyadic frequencies")
        if self.t <= 0:
            raise ValueError("t must be positive")

    @property
    def k(self) -> float:
        return self.c.gamma / self.c.alpha


def build_inflation_data(cfg: InflationConfig, n_freq: float) -> tuple[
        FrequencyProfile, FrequencyProfile, FrequencyProfile]:
    """Indicator data (u0hat, v0hat, w0hat) at block frequency N = n_freq.

    u0hat and w0hat are sharp lattice indicators of the unit intervals at
    kN and N (half-open lattice realization) scaled by N^{-s}; v0hat is
    identically zero.  Both nonzero data must come out with H^s norm in
    [1/2, 2].
    """
    k = cfg.k
    dxi = cfg.delta_xi
    if 1.0 / dxi < 8:
        raise ValueError("intervals of unit length need at least 8 lattice points")
    amp = n_freq ** (-cfg.s)
    u0 = FrequencyProfile.from_indicator(dxi, k * n_freq, k * n_freq + 1.0, amp)
    w0 = FrequencyProfile.from_indicator(dxi, n_freq, n_freq + 1.0, amp)
    v0 = FrequencyProfile(dxi, np.array([0], dtype=np.int64), np.zeros(1, dtype=complex))
    for name, prof in (("u0", u0), ("w0", w0)):
        norm = prof.sobolev_norm(cfg.s)
        if not 0.5 <= norm <= 2.0:
            raise ValueError(f"|{name}|_Hs = {norm:g} outside [1/2, 2]; "
                             "the data family degenerates for this coefficient triple")
    return u0, v0, w0


@dataclass(frozen=True)
class ModulationReport:
    n_freq: float
    phi2_over_n2_min: float
    phi2_over_n2_max: float
    phi1_over_n2_min: float
    phi1_over_n2_max: float
    psi_max: float
    identity_value: float  # |(alpha-gamma) mu| / alpha^2


def check_modulation_conditions(c: Coefficients, n_freq: float,
                                dxi: float = 0.125) -> ModulationReport:
    """Sweep the data support and bound the two fast phases and the slow mismatch.

    xi1, xi2 run over the lattice in [N, N+1], xi over [kN, kN+1] with
    k = gamma/alpha.  Asserts |phase2|/N^2 inside [0.5, 2] times the exact
    corner value |(alpha-gamma) mu|/alpha^2, and psi bounded by
    10 (|alpha| + |gamma|) independently of N.
    """
    k = c.gamma / c.alpha
    grid_unit = np.arange(0, int(round(1.0 / dxi)) + 1) * dxi
    xi1 = n_freq + grid_unit
    xi2 = n_freq + grid_unit
    xi = k * n_freq + grid_unit
    xi_g, xi1_g, xi2_g = np.meshgrid(xi, xi1, xi2, indexing="ij")

    phi2 = np.abs(phase_phi(c, xi_g - xi1_g + xi2_g, xi2_g)) / n_freq**2
    phi1 = np.abs(phase_phi(c, xi_g, xi1_g)) / n_freq**2
    psi = np.abs(phase_psi(c, xi_g, xi1_g, xi2_g))

    identity = abs((c.alpha - c.gamma) * compute_mu(c)) / c.alpha**2
    report = ModulationReport(
        n_freq=n_freq,
        phi2_over_n2_min=float(phi2.min()),
        phi2_over_n2_max=float(phi2.max()),
        phi1_over_n2_min=float(phi1.min()),
        phi1_over_n2_max=float(phi1.max()),
        psi_max=float(psi.max()),
        identity_value=identity,
    )
    if not (0.5 * identity <= report.phi2_over_n2_min
            and report.phi2_over_n2_max <= 2.0 * identity):
        raise AssertionError(
            f"|phase2|/N^2 range [{report.phi2_over_n2_min:g}, {report.phi2_over_n2_max:g}] "
            f"leaves [0.5, 2] x {identity:g}"
        )
    if report.psi_max > 10.0 * (abs(c.alpha) + abs(c.gamma)):
        raise AssertionError(f"psi_max = {report.psi_max:g} exceeds its uniform bound")
    return report


@dataclass(frozen=True)
class InflationRow:
    n_freq: float
    norm_u0: float
    norm_w0: float
    norm_u3: float
    ratio: float
    phi2_over_n2_min: float
    phi2_over_n2_max: float
    psi_max: float


@dataclass(frozen=True)
class InflationReport:
    config: InflationConfig
    rows: tuple[InflationRow, ...]
    slope: float
    slope_half_width: float
    target_slope: float

    def to_dict(self) -> dict:
        return {
            "s": self.config.s,
            "t": self.config.t,
            "alpha": self.config.c.alpha,
            "beta": self.config.c.beta,
            "gamma": self.config.c.gamma,
            "delta_xi": self.config.delta_xi,
            "n_list": list(self.config.n_list),
            "slope": self.slope,
            "slope_half_width": self.slope_half_width,
            "target_slope": self.target_slope,
            "rows": [row.__dict__ for row in self.rows],
        }


def fit_loglog_slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares slope of log y against log x, with a 1-sigma half width."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    if lx.size < 2:
        raise ValueError("need at least two points for a slope")
    design = np.stack([lx, np.ones_like(lx)], axis=1)
    coef, res, *_ = np.linalg.lstsq(design, ly, rcond=None)
    slope = float(coef[0])
    if lx.size > 2 and res.size:
        var = float(res[0]) / (lx.size - 2)
        half = math.sqrt(var / np.sum((lx - lx.mean()) ** 2))
    else:
        half = 0.0
    return slope, half


def run_inflation(cfg: InflationConfig, keep_fast_term: bool = True) -> InflationReport:
    """Sweep N, evaluate the exact third iterate, fit the growth-ratio slope.

    ratio(N) = |u3(t)|_{H^s} / (|u0| |w0|^2 + |u0| |v0|^2); the growth law
    predicts ratio ~ t N^{-2s}, so the fitted slope targets -2s.  The sweep
    also asserts the ratio is increasing and grows by at least a quarter of
    (N_max/N_min)^{-2s}, witnessing unbounded inflation.
    ``keep_fast_term=False`` drops the fast-phase (oscillating) part of the
    kernel, isolating the secular contribution.
    """
    if len(cfg.n_list) < 3:
        raise ValueError("need at least three N values to fit a slope")
    n_min = min(cfg.n_list)
    if cfg.t * n_min**2 < TIME_MARGIN:
        raise ValueError(
            f"t = {cfg.t:g} too small: need t * N_min^2 >= {TIME_MARGIN:g}"
        )
    rows = []
    for n_freq in sorted(cfg.n_list):
        u0, v0, w0 = build_inflation_data(cfg, n_freq)
        mod = check_modulation_conditions(cfg.c, n_freq, cfg.delta_xi)
        prof = third_iterate_profile(
            cfg.c, u0, w0, cfg.t, include_second=keep_fast_term
        )
        norm_u3 = prof.sobolev_norm(cfg.s)
        nu, nw = u0.sobolev_norm(cfg.s), w0.sobolev_norm(cfg.s)
        nv = v0.sobolev_norm(cfg.s)
        denom = nu * nw**2 + nu * nv**2
        rows.append(InflationRow(
            n_freq=n_freq,
            norm_u0=nu,
            norm_w0=nw,
            norm_u3=norm_u3,
            ratio=norm_u3 / denom,
            phi2_over_n2_min=mod.phi2_over_n2_min,
            phi2_over_n2_max=mod.phi2_over_n2_max,
            psi_max=mod.psi_max,
        ))

    ratios = np.array([r.ratio for r in rows])
    ns = np.array([r.n_freq for r in rows])
    if np.any(np.diff(ratios) <= 0):
        raise AssertionError("growth ratio is not increasing along the N sweep")
    growth = ratios[-1] / ratios[0]
    floor = (ns[-1] / ns[0]) ** (-2 * cfg.s) / 4.0
    if growth < floor:
        raise AssertionError(
            f"ratio growth {growth:g} below the divergence floor {floor:g}"
        )
    slope, half = fit_loglog_slope(ns, ratios)
    return InflationReport(
        config=cfg,
        rows=tuple(rows),
        slope=slope,
        slope_half_width=half,
        target_slope=-2 * cfg.s,
    )
