"""Anisotropic germ calculus on lattice windows."""

from .geometry import (MultiIndex, ScaleMap, Scaling, aniso_degree, aniso_distance,
                       compose_scale, invert_scale, multi_indices, scale_point)
from .germs import (CenterReport, DistGerm, Germ, Window, center_check,
                    frozen_coefficient_germ, germ_from_text, germ_to_text, jet_germ,
                    load_germ, restrict_initial, save_germ, scale_germ)
from .discrete_ops import (DiffOperator, DualPoint, EllipticityReport, adjoint,
                           apply_to_field, apply_to_germ, continuum_symbol,
                           discrete_monomial, discrete_symbol, fractional_symbol,
                           is_discretely_elliptic, load_operator, make_operator,
                           monomial_diff_rule_check, operator_from_text,
                           operator_to_text, preset_operator, save_operator)
from .norms import (NormReport, RatioDiagnostic, TestFunctionFamily,
                    build_default_family, holder_bound_ratio, holder_local,
                    lambda_grid, local_norms, mcshane_extend, norm_G_eta,
                    operator_holder_bound_ratio, reevaluate_report,
                    seminorm_G_eta_alpha, seminorm_G_gamma, sup_below)
from .liouville import (KernelBasis, SymbolZero, centered_rigidity_check,
                        polynomial_kernel, symbol_zero_search)
from .coeff_bounds import (ProbeReport, WeightSystem, construct_weights,
                           index_set, probe_coefficients)
from .harness import (ExperimentConfig, RatioReport, member_rng, run_ivp_probe,
                      run_local_probe, run_schauder_probe, schauder_sides,
                      solve_poisson, summarize)

__version__ = "0.1.0"
