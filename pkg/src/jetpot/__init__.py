"""Nonlinear potential theory on the 2-jet space.

Jets ``(r, p, A)`` in ``R x R^n x Sym(n)``, monotonicity cones, Dirichlet
duality, canonical operators, Garding polynomials and a grid verification
harness for comparison principles.
"""
from .canonical import (LinearFamily, SumFamily, canonical_catalog, canonical_eval,
                        canonical_operator, dual_canonical_eval, eigen_gradient_family, family_op,
                        graphing, lipschitz_seminorm, pointedness_check, solve_ray,
                        traceless_hyperplane)
from .cones import (DirectionalCone, FundamentalCone, MonotonicityCone, cone_D, cone_from_dict,
                    cone_N, cone_NP, cone_P, cone_R, fundamental_embed, minimal_cone,
                    strict_approximator)
from .errors import (CapabilityError, ConstraintViolation, DomainError, EvaluationError,
                     GeometryError, HyperbolicityError, Inconclusive, InfeasibleError,
                     JetpotError, LevelError, PreconditionError, ResolutionError, SearchFailure,
                     StructureError)
from .garding import (GardingPolynomial, det_polynomial, elementary_symmetric, garding_from_name,
                      lift_gradient_free, sigma_polynomial, tau_polynomial)
from .grid import GridDomain
from .jets import Jet, RadialProfile, fd_jet, identity_jet, power_profile, radial_jet, random_jets
from .operators import (OperatorSpec, admissible_levels, catalog, catalog_names,
                        duality_relation_check, eval_operator, operator_checks)
from .report import VerificationReport, emit_report
from .subeq import (CompatiblePair, ConstraintSet, Interval, compatibility_check, dual_margin,
                    jet_addition_check, level_set, monotonicity_check, tameness_check)
from .verify import (SCENARIOS, FunctionOracle, bad_test_jet_search, comparison_check,
                     jet_inclusion_check, radial_check, radial_descriptor, run_scenario,
                     strict_sequence_check)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
