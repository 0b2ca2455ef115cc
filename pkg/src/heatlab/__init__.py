"""heatlab: quantitative geometry and heat kernel bounds for weighted
rotationally symmetric models."""

from __future__ import annotations

from .config import TaskConfig, config_hash, parse_config, render_config
from .errors import (ConfigError, HeatlabError, NumericFailure,
                     PreconditionError, UnsupportedError)
from .htransform import (HarmonicWeight, KernelIdentityReport, TransformPair,
                         build_two_end_weight, verify_kernel_identity)
from .isoperimetry import (IsoProfile, TableIsoProfile, asymptotic_profile,
                           check_infimum_hypotheses, functional_integrals,
                           functional_lower_bound, h0_inf, monotone_envelope,
                           profile_halfline, profile_sphere,
                           warped_product_profile)
from .model import (CapacityResult, RadialHarmonic, WeightedModel,
                    capacity_annulus, check_spherical_harnack_premises,
                    classify_parabolicity, fit_volume_exponent, log_volume,
                    radial_harmonic, ricci_radial, volume)
from .monotone import InversePair, MonotoneTab, generalized_inverse
from .profiles import (EuclideanProfile, ExpAlphaProfile, FullLineProfile,
                       HyperbolicProfile, PowerProfile, RLogRProfile,
                       TableProfile, make_profile, two_end_profile)
from .solver import (DIRICHLET, NEUMANN, GridSpec, KernelDiag, SolveResult,
                     kernel_diag, solve, sup_diag)
from .spectral import (BoundsReport, ExponentFit, FaberKrahnFunction,
                       eigenvalue_table, fit_decay_exponent, fk_connected_sum,
                       fk_from_iso, gamma_inverse, heat_lower_bound,
                       heat_upper_bound, hypothesis_fk, lambda1_dirichlet,
                       lambda1_lower_locally_harnack, lambda1_rayleigh_upper,
                       log_gamma_inverse, log_lower_bound, two_end_pipeline)
from .tasks import run_task, sweep

__version__ = "0.1.0"
