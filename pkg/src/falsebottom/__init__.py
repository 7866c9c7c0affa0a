"""Solver for the two-phase false-bottom Stefan problem.

A fresh-water layer floating on salty ocean water freezes at its top and
dissolves at its bottom, so a thin ice layer (the "false bottom") is bounded
by two moving interfaces.  The heat and salt diffusion problem with both
interfaces free is reduced to a system of four weakly singular Volterra
integral equations for the interface fluxes, solved by Picard iteration,
and the bulk fields are reconstructed from heat-kernel representations.

Subpackages
-----------
kernels   heat kernels and their boundary-composed, singularity-factored forms
quad      product quadrature for Abel-type integrals and Gaussian convolutions
model     physical parameters, initial profiles, problem setup and validation
volterra  the fixed-point operator, Picard solver and time extension
fields    temperature/salinity reconstruction and consistency residuals
oracle    independent finite-difference front-tracking solver and benchmarks
cli       command line entry points
"""

from . import kernels, quad, model, volterra, fields, oracle

__all__ = ["kernels", "quad", "model", "volterra", "fields", "oracle"]

__version__ = "0.1.0"
