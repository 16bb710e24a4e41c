"""Coefficient algebra for the three-field quadratic derivative Schrodinger system.

The system couples three complex fields u, v, w with dispersion coefficients
alpha, beta, gamma (all nonzero).  Two polynomial invariants of the triple,

    mu    = beta*gamma - alpha*gamma - alpha*beta
    kappa = (alpha - beta) * (alpha - gamma) * (beta + gamma),

govern how resonant the quadratic interactions are, and together with the
dimension they decide the Sobolev regularity at which a smooth solution map
exists.  This module computes the invariants, classifies a coefficient triple
into its regularity regime, and evaluates the resonance phase functions used
by the Picard-iterate experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "Coefficients",
    "RegimeReport",
    "SigmaReport",
    "compute_mu",
    "compute_kappa",
    "compute_sigma",
    "classify",
    "phase_phi",
    "phase_psi",
    "phase_psi_factored",
    "three_wave_phase",
]


@dataclass(frozen=True)
class Coefficients:
    """Dispersion coefficients (alpha, beta, gamma) of the u, v, w equations."""

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma"):
            value = getattr(self, name)
            if not math.isfinite(value) or value == 0.0:
                raise ValueError(f"coefficient {name} must be finite and nonzero, got {value!r}")

    @property
    def mu(self) -> float:
        return compute_mu(self)

    @property
    def kappa(self) -> float:
        return compute_kappa(self)

    @property
    def sigma(self) -> float:
        return self.gamma / self.alpha

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.alpha, self.beta, self.gamma)


def compute_mu(c: Coefficients) -> float:
    """Resonance invariant mu = alpha*beta*gamma*(1/alpha - 1/beta - 1/gamma).

    Evaluated in the cancellation-free polynomial form beta*gamma -
    alpha*gamma - alpha*beta, which is the same algebraic quantity without
    the 1/alpha divisions (better conditioned for tiny coefficients).
    """
    return c.beta * c.gamma - c.alpha * c.gamma - c.alpha * c.beta


def compute_kappa(c: Coefficients) -> float:
    """Degeneracy invariant kappa = (alpha-beta)(alpha-gamma)(beta+gamma)."""
    return (c.alpha - c.beta) * (c.alpha - c.gamma) * (c.beta + c.gamma)


@dataclass(frozen=True)
class SigmaReport:
    """Ratio sigma = gamma/alpha with the alpha=beta degeneracy equivalence.

    When alpha == beta the reduced single-dispersion form of the system
    exists and the condition (beta+gamma)*(gamma-alpha) != 0 is equivalent
    to sigma not being +1 or -1.  Both booleans are reported (None when
    alpha != beta) and checked against each other.
    """

    sigma: float
    product_nonzero: Optional[bool]
    sigma_not_unimodular: Optional[bool]


def compute_sigma(c: Coefficients) -> SigmaReport:
    """Return sigma = gamma/alpha, plus the degeneracy booleans when alpha == beta."""
    sigma = c.gamma / c.alpha
    if c.alpha != c.beta:
        return SigmaReport(sigma=sigma, product_nonzero=None, sigma_not_unimodular=None)
    product_nonzero = (c.beta + c.gamma) * (c.gamma - c.alpha) != 0.0
    not_unimodular = sigma not in (1.0, -1.0)
    if product_nonzero != not_unimodular:
        raise RuntimeError(
            "degeneracy equivalence violated: "
            f"(beta+gamma)(gamma-alpha)!=0 is {product_nonzero} but sigma={sigma} "
            f"gives sigma not in {{+1,-1}} = {not_unimodular}"
        )
    return SigmaReport(sigma=sigma, product_nonzero=product_nonzero, sigma_not_unimodular=not_unimodular)


@dataclass(frozen=True)
class RegimeReport:
    """Classification of (d, alpha, beta, gamma) into a well-posedness regime.

    ``wp_threshold`` is the Sobolev exponent above which local
    well-posedness with a smooth solution map is known, with
    ``wp_strict`` telling whether the bound is strict (s > threshold) or
    not (s >= threshold).  ``None`` means the regime carries no reported
    threshold (either genuinely open, or a degenerate family on which the
    available statements conflict; see ``notes``).
    """

    d: int
    mu: float
    kappa: float
    sigma: float
    s_critical: float
    mu_sign: str  # mu_pos | mu_zero | mu_neg
    kappa_class: str  # kappa_zero | kappa_nonzero
    case: str  # A1 | A2 | A3 | A4 | none
    wp_threshold: Optional[float]
    wp_strict: Optional[bool]
    illposedness_note: str
    notes: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "mu": self.mu,
            "kappa": self.kappa,
            "sigma": self.sigma,
            "s_critical": self.s_critical,
            "mu_sign": self.mu_sign,
            "kappa_class": self.kappa_class,
            "case": self.case,
            "wp_threshold": self.wp_threshold,
            "wp_strict": self.wp_strict,
            "illposedness_note": self.illposedness_note,
            "notes": list(self.notes),
        }


_MERGED_CELL_NOTE = (
    "threshold for d>=4 read from the single merged table cell s >= s_c "
    "shared by all sign regimes"
)
_AMBIGUOUS_NOTE = (
    "degenerate family (beta+gamma)(gamma-alpha)=0: the available statements "
    "overlap (well-posedness claimed for alpha=beta at positive regularity, "
    "failure of C^2 smoothness claimed at every s); no threshold is reported"
)


def classify(d: int, c: Coefficients) -> RegimeReport:
    """Classify the coefficient triple in dimension d (1..4; 4 stands for d>=4).

    Degeneracies (kappa = 0, alpha = beta, ...) are decided by exact
    comparison of the given floats; callers wanting fuzzy matching should
    snap their inputs first.
    """
    if d not in (1, 2, 3, 4):
        raise ValueError(f"dimension d must be 1, 2, 3 or 4 (4 meaning d>=4), got {d}")
    mu = compute_mu(c)
    kappa = compute_kappa(c)
    sigma = c.gamma / c.alpha
    s_c = d / 2.0 - 1.0

    if mu >= 0.0 and kappa == 0.0:
        # algebraically impossible for nonzero real coefficients
        raise RuntimeError(f"invariant violated: mu={mu} >= 0 with kappa=0 for {c}")

    mu_sign = "mu_pos" if mu > 0 else ("mu_zero" if mu == 0 else "mu_neg")
    kappa_class = "kappa_nonzero" if kappa != 0 else "kappa_zero"
    case = "none"
    threshold: Optional[float] = None
    strict: Optional[bool] = None
    illposedness = ""
    notes: list[str] = []

    if kappa != 0.0:
        if mu > 0.0:
            if d == 1:
                threshold, strict = 0.0, False
                case = "A1"
                illposedness = "flow map is not C^3 for s < 0"
            elif d in (2, 3):
                threshold, strict = s_c, False
            else:
                threshold, strict = s_c, False
                notes.append(_MERGED_CELL_NOTE)
        elif mu == 0.0:
            illposedness = "flow map is not C^2 for s < 1"
            if d <= 3:
                threshold, strict = 1.0, False
            else:
                threshold, strict = s_c, False
        else:
            # kappa != 0 forces (beta+gamma)(gamma-alpha) != 0
            illposedness = "flow map is not C^2 for s < 1/2"
            if d == 1 or d == 2:
                threshold, strict = 0.5, False
            elif d == 3:
                threshold, strict = 0.5, True
                case = "A3"
                notes.append("s = 1/2 = s_c (scaling critical) remains open")
            else:
                threshold, strict = s_c, False
                notes.append(_MERGED_CELL_NOTE)
    else:
        # kappa == 0 (hence mu < 0)
        degenerate = (c.beta + c.gamma) * (c.gamma - c.alpha) == 0.0
        if not degenerate:
            # with kappa=0 this forces alpha == beta and sigma not in {+1,-1}
            illposedness = "flow map is not C^2 for s < 1/2"
            if d in (2, 3):
                case = "A2"
                threshold = max(0.5, s_c)
                strict = s_c >= 0.5
            else:
                notes.append(
                    "alpha=beta with sigma not in {+1,-1}: no threshold stated "
                    f"for d={d}"
                )
        else:
            illposedness = "flow map is not C^2 for any s"
            notes.append(_AMBIGUOUS_NOTE)
            if d == 4 and c.alpha == c.beta:
                case = "A4"
                notes.append("s = s_c remains open in this family")

    return RegimeReport(
        d=d,
        mu=mu,
        kappa=kappa,
        sigma=sigma,
        s_critical=s_c,
        mu_sign=mu_sign,
        kappa_class=kappa_class,
        case=case,
        wp_threshold=threshold,
        wp_strict=strict,
        illposedness_note=illposedness,
        notes=tuple(notes),
    )


def phase_phi(c: Coefficients, xi, eta):
    """Two-frequency resonance phase alpha*xi^2 - beta*(xi-eta)^2 - gamma*eta^2."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    out = c.alpha * xi**2 - c.beta * (xi - eta) ** 2 - c.gamma * eta**2
    return out if out.ndim else float(out)


def phase_psi(c: Coefficients, xi, xi1, xi2):
    """Phase mismatch phase_phi(xi, xi1) - phase_phi(xi - xi1 + xi2, xi2).

    The beta terms of the two phases cancel identically, so the difference
    is evaluated in the equivalent product form
    (xi1 - xi2) * {2*alpha*xi - (alpha+gamma)*xi1 + (alpha-gamma)*xi2},
    which avoids the catastrophic cancellation of two O(xi^2) quantities.
    """
    xi = np.asarray(xi, dtype=float)
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    out = (xi1 - xi2) * (
        2.0 * c.alpha * xi - (c.alpha + c.gamma) * xi1 + (c.alpha - c.gamma) * xi2
    )
    return out if out.ndim else float(out)


def phase_psi_factored(c: Coefficients, n: float, eps: float, eps1: float, eps2: float,
                       k: Optional[float] = None):
    """Factored form of phase_psi for xi1 = n+eps1, xi2 = n+eps2, xi = k*n+eps.

    Equals (eps1-eps2) * {2(alpha*k-gamma)n + 2*alpha*eps
    - (alpha+gamma)*eps1 + (alpha-gamma)*eps2}; with the resonant choice
    k = gamma/alpha the n-dependence drops out entirely.
    """
    if k is None:
        k = c.gamma / c.alpha
    bracket = (
        2.0 * (c.alpha * k - c.gamma) * n
        + 2.0 * c.alpha * eps
        - (c.alpha + c.gamma) * eps1
        + (c.alpha - c.gamma) * eps2
    )
    return (eps1 - eps2) * bracket


def three_wave_phase(sigma: float, xi1, xi2, xi3) -> float:
    """Three-wave phase |xi1|^2 - |xi2|^2 - sigma*|xi3|^2 on a zero-sum triple.

    The inputs are d-dimensional frequency vectors with xi1+xi2+xi3 = 0
    (checked to 1e-9 relative to the largest magnitude).
    """
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    xi3 = np.asarray(xi3, dtype=float)
    scale = max(np.abs(xi1).max(), np.abs(xi2).max(), np.abs(xi3).max(), 1e-300)
    residual = np.abs(xi1 + xi2 + xi3).max()
    if residual > 1e-9 * scale:
        raise ValueError(f"xi1+xi2+xi3 must vanish (residual {residual:g}, scale {scale:g})")
    return float(np.dot(xi1, xi1) - np.dot(xi2, xi2) - sigma * np.dot(xi3, xi3))
