"""Numerical pluripotential operators on a discrete flat torus.

The package models background (1,1)-forms as symmetric matrix fields on a
periodic grid, quasi-plurisubharmonic potentials as node functions with
explicit poles, and realizes mixed Monge-Ampere products, truncated
(non-pluripolar) products, envelopes, volumes of classes, and degenerate
Monge-Ampere solves as finite-dimensional, machine-checkable operations.
"""

from .envelopes import (ContactReport, EnvelopeResult, contact_concentration,
                        directional_slack, envelope, rooftop, v_theta)
from .errors import (InfeasibleError, InvalidArgumentError,
                     InvalidComparisonError, InvalidSetupError,
                     NonConvergenceError, PluritorusError,
                     SamplingExhaustedError, UnsupportedError)
from .forms import (BackgroundForm, ReferenceMetric, VolumeForm, add_metric,
                    big_certificate, class_equivalent, constant_form,
                    general_form, identity_metric, make_closed_form,
                    metric_form, psef_probe, scale_form, uniform_volume,
                    upper_volume_probe)
from .grid import GridTorus, dets, min_eigenvalues
from .measures import (ComparisonResult, DiscreteMeasure, MassDefect, bt_mixed,
                       delta_theta_estimate, ma, mass_monotonicity_check,
                       mixed_det_field, npp_mixed, total_mass,
                       truncation_level)
from .qpsh import (QPshFunction, SlackReport, TruncationMask, as_qpsh, chi_eps,
                   constant, is_theta_psh, sublevel_mask, theta_convex_slack,
                   truncate)
from .solver import (DominationReport, LocalComparisonReport, SolveResult,
                     SolverSetup, SubsolutionResult, domination_check,
                     local_comparison_check, solve_normalized, solve_twisted,
                     subsolution)
from .tolerances import DEFAULT_TOLS, Tolerances
from .volumes import (PropertyCheck, VolumeReport, current_volume_bounds,
                      monotonicity_check, scaling_check, vol_big, vol_class)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
