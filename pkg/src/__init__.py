"""
NNPhD
Splits a force field into a Lagrangian (energy-conserving) part and a
non-conservative residual, flags new physics from the λ = 1 phase
transition and fits closed forms to the residual.
"""

__version__ = "0.1.0"
