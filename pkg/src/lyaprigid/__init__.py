"""Numerical checks of Lyapunov-exponent rigidity for geodesic flows on negatively curved surfaces.

Modules
-------
riccati
    Periodic Riccati solutions, Lyapunov exponents, Jacobi growth oracle, trace chains.
hyperbolic
    Moebius algebra, Schottky and genus-two groups, closed-geodesic census.
metric
    Group-invariant conformal perturbations and their curvature.
geodesic
    Geodesic flow with deck re-entry.
orbits
    Multiple-shooting refinement of closed geodesics.
analysis
    Rigidity and entropy experiments.
cli
    Batch front end.
"""

from .errors import (BlowUp, ChainViolation, ConfigError, InsufficientSamples, LimitSetEscape,
                     LyapRigidError, MaxIterations, NoConvergence, NotHyperbolic,
                     PositiveCurvature, ToleranceFailure, WrongDeckWord)
from .riccati import (CurvatureProfile, LyapunovReport, RiccatiSolution, StepControl,
                      integrate_riccati, jacobi_growth_oracle, lyapunov_exponent_periodic,
                      stable_solution, trace_chain_case1, trace_chain_case2, unstable_solution)

__version__ = "0.1.0"
