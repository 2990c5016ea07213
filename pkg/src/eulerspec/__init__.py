"""Spectral analysis of the 2D Euler equations linearized about a two-mode steady state."""

from eulerspec.lattice import LatticeVector, SliceDescriptor, kappa, contributing_slices
from eulerspec.coefficients import ProblemInstance, Controls, slice_coefficients
from eulerspec.spectra import nonimaginary_spectrum, slice_spectrum

__version__ = "0.1.0"

__all__ = [
    "LatticeVector",
    "SliceDescriptor",
    "ProblemInstance",
    "Controls",
    "kappa",
    "contributing_slices",
    "slice_coefficients",
    "slice_spectrum",
    "nonimaginary_spectrum",
]
