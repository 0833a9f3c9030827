"""Numerical toolkit for a wave equation on [-1, 0] coupled to a heat equation on the half-line.

Modules: ``corestate`` (grids, states, norms), ``spectral`` (characteristic
functions and their zeros), ``resolvent`` (closed-form resolvent, norm
scans, approximate eigenvectors), ``timedomain`` (energy-conserving
integrator and decay fits), ``admissible`` (domain and range checks,
admissible-data constructors) and ``cli``.
"""

__version__ = "0.1.0"

from .corestate import EnergyTrace, GridFunction, State, Variant, energy, state_norm
from .exceptions import ContractViolation, NumericalDiagnostic
from .fitting import DecayFit, PowerLawFit, power_law_fit
from .spectral import (CharacteristicKind, Rect, RootRecord, axis_margin, char_derivative, char_value,
                       eigen_locus_fit, find_roots, principal_sqrt, winding_number)
from .resolvent import (ResolventInput, ScanPoint, apply_resolvent, approx_eigvec, approx_eigvec_residual,
                        green_convolve, heat_tail, resolvent_norm, resolvent_residual, scan, solve_interface,
                        u_particular)
from .admissible import (AdmissibilityReport, apply_generator, check_range, densify_range, make_admissible)
from .timedomain import (DecayRateEstimator, SimConfig, decay_fit, neumann_growth_demo, run, simulate, step)

__all__ = [
    "EnergyTrace", "GridFunction", "State", "Variant", "energy", "state_norm",
    "ContractViolation", "NumericalDiagnostic",
    "DecayFit", "PowerLawFit", "power_law_fit",
    "CharacteristicKind", "Rect", "RootRecord", "axis_margin", "char_derivative", "char_value",
    "eigen_locus_fit", "find_roots", "principal_sqrt", "winding_number",
    "ResolventInput", "ScanPoint", "apply_resolvent", "approx_eigvec", "approx_eigvec_residual",
    "green_convolve", "heat_tail", "resolvent_norm", "resolvent_residual", "scan", "solve_interface",
    "u_particular",
    "AdmissibilityReport", "apply_generator", "check_range", "densify_range", "make_admissible",
    "DecayRateEstimator", "SimConfig", "decay_fit", "neumann_growth_demo", "run", "simulate", "step",
]
