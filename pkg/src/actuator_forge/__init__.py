"""Optimal actuator shapes for 1D parabolic control problems via the moment method.

The package computes, for a prescribed measure fraction, the interval union
that maximizes the worst weighted mode mass over the represented modes; the
weights come from minimal-norm biorthogonal families to the decaying
exponentials of the spectrum.  It also synthesizes the matching null controls,
verifies terminal zeroing spectrally, and solves the lumped-profile variant
in closed form.

Typical use:

>>> from actuator_forge import DesignProblem, solve_truncated, HEAT
>>> problem = DesignProblem.assemble(HEAT, T=0.05, L=0.2, N=5)
>>> result = solve_truncated(problem)
>>> result.omega.measure
0.628318...
"""

from .biortho import (BiorthogonalFamily, ConvergenceReport, GramSystem,
                      GrowthFit, build_biorthogonal, converge_in_M,
                      gamma_weight, gram_entry, growth_fit)
from .control import (InitialDatum, MomentControl, MonteCarloReport,
                      ResidualReport, control_energy, monte_carlo_expectation,
                      randomized_cost, simulate_terminal, synthesize_control)
from .design import (Certificate, DesignProblem, DesignResult, SimplexWeights,
                     SolverConfig, StationarityReport, brute_force_small,
                     estimate_N0_bound, j_trunc, mass_floor, solve_truncated,
                     stationarity_scan, tail_certificate)
from .errors import (DegenerateCombinationError, NumericalError,
                     PrecisionError, UncontrollableModeError, ValidationError)
from .geometry import (BathtubResult, IntervalUnion, ModeCombination, bathtub,
                       component_count, measure, read_intervals,
                       superlevel_set, symdiff_measure, write_intervals)
from .lumped import (LumpedProfile, SummabilityReport, rational_degeneracy,
                     solve_lumped, summability_diagnostic, verify_equalization)
from .spectrum import (HEAT, ExplicitReal, MuntzReport, SineFractional,
                       SinePowerLaw, SpectralFamily, eigenvalue, mode_cross,
                       mode_mass, mode_masses, muntz_diagnostic, parse_family)

__version__ = "0.1.0"

__all__ = [
    "BathtubResult", "BiorthogonalFamily", "Certificate", "ConvergenceReport",
    "DegenerateCombinationError", "DesignProblem", "DesignResult",
    "ExplicitReal", "GramSystem", "GrowthFit", "HEAT", "InitialDatum",
    "IntervalUnion", "ModeCombination", "MomentControl", "MonteCarloReport",
    "MuntzReport", "NumericalError", "PrecisionError", "ResidualReport",
    "SimplexWeights", "SineFractional", "SinePowerLaw", "SolverConfig",
    "SpectralFamily", "StationarityReport", "SummabilityReport",
    "UncontrollableModeError", "ValidationError",
    "bathtub", "brute_force_small", "build_biorthogonal", "component_count",
    "control_energy", "converge_in_M", "eigenvalue", "estimate_N0_bound",
    "gamma_weight", "gram_entry", "growth_fit", "j_trunc", "mass_floor",
    "measure", "mode_cross", "mode_mass", "mode_masses",
    "monte_carlo_expectation", "muntz_diagnostic", "parse_family",
    "randomized_cost", "rational_degeneracy", "read_intervals",
    "simulate_terminal", "solve_lumped", "solve_truncated",
    "stationarity_scan", "summability_diagnostic", "superlevel_set",
    "symdiff_measure", "synthesize_control", "tail_certificate",
    "verify_equalization", "write_intervals",
]
