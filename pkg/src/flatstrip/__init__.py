"""Geodesic flows with flat strips: a numerical workbench.

Two model surfaces are provided: the genus-2 octagon surface of curvature
-1 and a warped collar whose waist is a flat Euclidean band. The package
integrates geodesics and Jacobi fields, detects flat strips, builds the
strip-collapsing quotient, shadows pseudo-orbits, counts closed geodesics
and estimates entropy.
"""

from .errors import *  # noqa: F401,F403
from .hyperbolic import (CENTER, CIRCUMRADIUS, INRADIUS, ConjugacyClass, FuchsianGroup,
                         GroupWord, HPoint, IsometryMatrix, apply_isometry, axis_endpoints,
                         build_genus2_group, enumerate_conjugacy_classes, hyperbolic_distance,
                         is_primitive, reduce_to_fundamental_domain, translation_length)
from .surfaces import (Collar, CollarPoint, CollarProfile, ConstantNegative, UnitTangent,
                       build_collar, curvature_at, load_model_spec, sasaki_distance)
from .flow import (JacobiState, RankLabel, Trajectory, dphi_growth, geodesic_flow,
                   jacobi_evolve, lyapunov_exponent, rank_classify, riccati_slope,
                   unstable_slope)
from .asymptotic import (IdealPoint, are_biasymptotic, backward_endpoint, busemann,
                         forward_endpoint, heteroclinic_connector, horocycle_sample)
from .strips import (QuotientClass, QuotientPoint, Strip, detect_strip, equivalence_check,
                     expansivity_probe, q_config, quotient_class, quotient_distance,
                     quotient_flow, semiconjugacy_check)
from .shadowing import (PeriodicOrbitRecord, PseudoOrbit, close_periodic,
                        enumerate_periodic_orbits, make_pseudo_orbit, shadow_search, skeleton)
from .ergodic import (EntropyEstimate, Observable, OrbitMeasure, SeparationCount,
                      class_entropy_check, count_separated, entropy_estimate, growth_rate_per,
                      liouville_average, mme_diagnostics, orbit_measure_integrate, ruelle_check)
from .config import ExperimentConfig

__version__ = "0.1.0"
