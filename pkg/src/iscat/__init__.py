"""Scattering-transform conserved energies for cubic NLS, mKdV and KdV.

Modules:
  grid        spectral calculus on a uniform periodic grid
  hopf        exact shuffle-algebra expansion of the transmission logarithm
  hierarchy   symbolic recursion for the polynomial conserved Hamiltonians
  scattering  transmission coefficients by ODE integration, pole location
  energies    fractional conserved energies/momenta and trace formulas
  evolve      split-step flows for conservation experiments
  cli         command-line front end
"""

__version__ = "0.1.0"
