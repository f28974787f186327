"""Stochastic SIS epidemic model toolkit.

Closed-form solutions, Brownian path construction, SDE integrators, the
general eta-based extinction/persistence framework, scale-function
recurrence checks and reproducible Monte Carlo studies.
"""

from .asymptotics import (Recurrence, crossing_count, lyapunov_estimate, persistence_bracket,
                          recurrence_classify, scale_density, scale_function)
from .config import ConfigError, ExperimentConfig, load_config
from .ensemble import run_ensemble, scheme_cross_check, wz_convergence_study
from .emit import emit_report
from .exact import (deterministic_solution, stratonovich_exact, time_varying_deterministic,
                    wong_zakai_exact)
from .framework import (CoefficientTriple, Verdict, classify, comparison_harness, eta_eval,
                        eta_root, eta_sup, model_triple, validate_coefficients)
from .integrators import SchemeSpec, euler_maruyama, heun_stratonovich, logodds_euler, wz_rk4
from .noise import BrownianPath, TimeGrid, polygonal_eval, refine_bridge, sample_path
from .params import SisParams, derived_constants, ito_persistence_level, validate_params
from .trajectory import Trajectory

__version__ = "0.1.0"
