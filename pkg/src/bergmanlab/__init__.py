"""Weighted Bergman kernels, Demailly approximants and psh envelopes on model domains."""
from .bergman import (BasisSpec, GramFactor, MomentTable, engine_for, extremal_witness_check,
                      gram_kernel_general, inclusion_test, kernel_diag_toric, make_basis,
                      moment_table, monomial_norm)
from .demailly import (Approximant, Constants, ConvergenceReport, c2_constant, converge_run,
                       demailly_value, limsup_regularized, lower_bound_check, select_radius,
                       upper_bound_check)
from .domains import Domain, GridSpec, ball_volume, dist_to_boundary, make_grid
from .envelope import (EnvelopeResult, LogProfile, convex_envelope, monotone_minorant,
                       psh_envelope_toric, subharmonicity_check)
from .exceptions import (BergmanLabError, CatalogError, ConditioningError, ConfigError,
                         ContractError, DomainError, ExcludedMonomialError, GridError,
                         IterationError, QuadratureError)
from .weights import CATALOG_NAMES, SampledField, Weight, catalog, eval_weight, usc_regularize

__version__ = "0.1.0"
