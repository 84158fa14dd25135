"""Mehler semigroups driven by Lévy noise on spectrally diagonal operators.

Submodules
----------
spectral     eigenvalue models and Weyl checks
noise        Gaussian plus stable noise models and samplers
mehler       characteristic functions, semigroup action, measure sampling
lyapunov     Lyapunov functions and hypothesis checkers
paths        path simulation, regularity statistics, dichotomy experiment
potential    finite-chain potential theory (resolvent, balayage, nests)
cli          command line entry point
"""

__version__ = "0.1.0"
