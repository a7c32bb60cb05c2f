"""Wavelet calibration of aggregated functional data.

Observed curves are convex combinations of unknown component curves plus
noise. Each observed curve is transformed, its coefficients are shrunk
(closed-form Bayes rule under correlated noise, or the posterior mean of a
joint model sampled by Robust Adaptive Metropolis under positive Gamma
noise), and the components are recovered by least-squares projection onto
the known weights.
"""

__version__ = "0.1.0"

from .errors import (
    IllConditionedWeightsError,
    InvalidInputError,
    ResourceLimitError,
    SamplerInitError,
    ScenarioError,
)
from .gamma_posterior import (
    GammaModel,
    compiled_target,
    feasible_init,
    log_likelihood,
    log_posterior,
    log_prior,
    shrink_panel_gamma,
)
from .harness import compare_methods, mse, run_scenario
from .models import (
    aggregate_panel,
    grid,
    project_components,
    reconstruct_components,
    validate_weights,
)
from .noise import (
    Ar1NoiseSpec,
    ArfimaNoiseSpec,
    GammaNoiseSpec,
    NoNoiseSpec,
    NormalNoiseSpec,
    arfima_pi_coeffs,
    gen_ar1_panel,
    gen_arfima_panel,
    gen_gamma_panel,
    gen_normal_panel,
    generate_panel,
    snr_calibrate,
)
from .ram import RamConfig, adapt_factor, posterior_mean, ram_step, run_chain, run_chain_compiled
from .scenario import ScenarioSpec, load_scenarios, scenario_from_dict
from .shrinkage import (
    PriorConfig,
    p_of_level,
    shrink_coefficient,
    shrink_panel_level_dependent,
    universal_soft_threshold,
)
from .signals import SIGNALS, dj_function
from .wavelets import TransformPlan, build_transform_matrix, dwt, idwt, mad_sigma_level
