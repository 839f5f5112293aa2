"""Numerical laboratory for nonlinear (cubic) squeezing of heralded
photon-added coherent states from seeded parametric down-conversion."""

__version__ = "0.1.0"

from .errors import CoefficientError, GridError, TruncationError
from .fock import (FockOperator, QuantumState, WignerGrid, coherent,
                   default_dim, displacement, expectation, fock_state,
                   make_ladder, number_op, pacs, quadrature_ops, rotate,
                   rotated_quadratures, squeezed_vacuum, superposition01,
                   vacuum, variance, wigner_grid)
from .squeezing import (NonlinearSqueezingResult, OptimizerOptions,
                        VarianceDecomposition, gaussian_bound,
                        minimize_over_01_family, minimize_squeezing,
                        min_ratio_at_z, nonlinear_operator,
                        optimal_012_amplitudes, squeezing_ratio, to_db,
                        variance_decomposition)
from .pdc import (HeraldedCoefficients, MeasurementBasis, SchmidtDecomposition,
                  SeedProfile, closed_form_variance, complete_basis,
                  double_gaussian_jsa, frequency_grid, gaussian_profile,
                  heralded_coeffs, make_seed_profile, random_unitary,
                  reduced_state, scenario_sweep, schmidt_decompose,
                  schmidt_number, seed_overlaps, widths_for_schmidt_number)
from .twomode import (TwoModeConfig, optimize_basis, rotation_basis,
                      simultaneous_states, two_mode_reduced)
from .homodyne import (BinnedMoments, HomodyneSampleSet, MonteCarloResult,
                       QuadratureDistribution, binned_moments,
                       four_angle_variance, monte_carlo_squeezing,
                       monte_carlo_z_scan, quadrature_pdf, sample,
                       sample_moments)
