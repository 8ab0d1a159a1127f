"""Simulation and effective-potential analysis of the inverting tippe top."""
from .dynamics import (FrictionModel, InversionReport, Trajectory, conservation_report, detect_inversion,
                       glide_derivative, integrate, normal_force, rolling_derivative)
from .errors import TippeTopError
from .model import (GlideState, IntegralSnapshot, TopParameters, boundary_values, jellett, lambda_threshold,
                    modified_energy, routh, total_energy)
from .nutation import (PeriodReport, companion_roots, elliptic_K, epsilon_w, period_elliptic, period_exact,
                       period_report, t_max, t_upp, turning_points)
from .potential import (PotentialParams, ab_beta, convexity_witness, delta_minus, delta_plus, find_minimum,
                        minimum_path, v_rational)

__version__ = "0.1.0"
