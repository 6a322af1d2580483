"""Pair creation from the 1D Dirac vacuum in supercritical fields.

Split-operator spectral evolution of the free negative-energy basis under a
composite Sauter-step potential, Bogoliubov projections onto the free basis,
derived observables (yield, spectra, creation rate, temporal decoding), and
a sharp-step analytic oracle for validation.
"""

from .constants import ATOMIC, PhysicalConstants

__version__ = "0.1.0"

__all__ = ["ATOMIC", "PhysicalConstants", "__version__"]
