"""Two-photon splitting by a waveguide-coupled emitter and an interferometer.

A two-level emitter scatters a two-photon wavepacket; the reflected field
carries one early and one late photon whenever the pair arrives close enough
together for blockade to act. A Mach-Zehnder stage after the emitter routes
early and late photons to different ports. This package computes the output
amplitudes for arbitrary separable or time-entangled inputs, integrates the
probability that the photons leave through different ports, and optimizes
pulse bandwidths, interferometer angles, and entangled pulse shapes.

Time is measured in units of the emitter lifetime (decay rate 1).
"""

from .efficiency import (BunchCheck, EfficiencyResult, MomentMatrix,
                         bunch_check, efficiency_from_moments, input_moments,
                         moment_edges, oracle_stationary_exponential,
                         oracle_unentangled_exponential, splitting_efficiency,
                         stationary_limit_moments)
from .interferometer import (ConsistencyError, MziSetting, PortAmplitudes,
                             mzi_matrix, pair_weights, port_amplitudes,
                             port_vectors, split_density,
                             split_density_expanded, split_weights)
from .optimizer import (AlternationResult, EfficiencySurface, PeakResult,
                        ShapeProblem, alternate_shape_and_setting,
                        build_r_matrix, convergence_from_problem, find_peak,
                        optimal_shape, optimize_setting,
                        shape_convergence_curve, sweep_surface)
from .pulses import (StationaryProfile, TwoPhotonInput, canonical_family,
                     even_mode_profile, hermite_functions, make_entangled_exponential,
                     make_entangled_gaussian_windowed, make_input,
                     make_stationary_mode, make_stationary_superposition,
                     make_unentangled)
from .quadrature import (IntegralEstimate, IntegrationDomain, OrderedGrid,
                         QuadratureError, QuadratureSpec, integrate_1d,
                         integrate_ordered_2d, ordered_grid, panel_nodes,
                         refine_edges, segmented_edges)
from .scattering import (AtomAmplitudes, CachedAmplitudes, atom_amplitudes,
                         closed_form_exponential_amplitudes,
                         cumulative_kernel, get_kernel,
                         stationary_fields_from_cumulatives)

__all__ = [
    "AlternationResult", "AtomAmplitudes", "BunchCheck", "CachedAmplitudes",
    "ConsistencyError", "EfficiencyResult", "EfficiencySurface",
    "IntegralEstimate", "IntegrationDomain", "MomentMatrix", "MziSetting",
    "OrderedGrid", "PeakResult", "PortAmplitudes", "QuadratureError",
    "QuadratureSpec", "ShapeProblem", "StationaryProfile", "TwoPhotonInput",
    "alternate_shape_and_setting", "atom_amplitudes", "build_r_matrix",
    "bunch_check", "canonical_family", "closed_form_exponential_amplitudes",
    "convergence_from_problem", "cumulative_kernel", "efficiency_from_moments",
    "even_mode_profile", "find_peak", "get_kernel", "hermite_functions",
    "input_moments", "integrate_1d", "integrate_ordered_2d",
    "make_entangled_exponential", "make_entangled_gaussian_windowed",
    "make_input", "make_stationary_mode", "make_stationary_superposition",
    "make_unentangled", "moment_edges", "mzi_matrix", "optimal_shape",
    "optimize_setting", "oracle_stationary_exponential",
    "oracle_unentangled_exponential", "ordered_grid", "pair_weights",
    "panel_nodes", "port_amplitudes", "port_vectors", "refine_edges",
    "segmented_edges", "shape_convergence_curve", "split_density",
    "split_density_expanded", "split_weights", "splitting_efficiency",
    "stationary_fields_from_cumulatives", "stationary_limit_moments",
    "sweep_surface",
]

__version__ = "0.1.0"
