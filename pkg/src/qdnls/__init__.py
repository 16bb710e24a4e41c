"""Numerical laboratory for three-field quadratic derivative Schrodinger systems."""

from .coeffs import (
    Coefficients,
    RegimeReport,
    classify,
    compute_kappa,
    compute_mu,
    compute_sigma,
    phase_phi,
    phase_psi,
    phase_psi_factored,
    three_wave_phase,
)
from .spectral import (
    Grid,
    SpectralField,
    SystemState,
    dealias,
    derivative,
    dyadic_project,
    forward_transform,
    free_propagate,
    inverse_transform,
    l2_norm,
    sobolev_norm,
)

__version__ = "0.1.0"
