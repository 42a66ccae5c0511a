"""Pseudo-spectral toolkit for Hall-MHD cancellation identities and 2.5-D simulations."""
from .spectral import Grid, SpectralScalar, AliasingError
from .fields import VectorField, random_divfree, random_field, curl, current_density, leray_project
from .nonlinear import hall_term, hall_term_alt, advect

__all__ = [
    "Grid",
    "SpectralScalar",
    "AliasingError",
    "VectorField",
    "random_divfree",
    "random_field",
    "curl",
    "current_density",
    "leray_project",
    "hall_term",
    "hall_term_alt",
    "advect",
]
__version__ = "0.1.0"
