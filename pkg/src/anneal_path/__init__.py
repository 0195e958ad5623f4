"""Annealed Langevin sampling along the dilation path and its competitors."""

from anneal_path.errors import InputError, NumericalError
from anneal_path.gaussian import (
    GaussianMixture,
    GaussianParams,
    gaussian_convolve,
    gaussian_product,
    gaussian_rescale,
    gaussian_shift,
    gmm_log_density,
    gmm_sample,
    gmm_score,
)
from anneal_path.metrics import (
    METRIC_NAMES,
    DiagnosticsReport,
    MetricConfig,
    evaluate,
    knn_kl,
    ksd,
    mmd,
    mms,
    occupied_modes,
    sinkhorn_w2,
)
from anneal_path.paths import (
    PATH_VARIANTS,
    MCEstimatorConfig,
    PathScore,
    RecursiveCostModel,
    Schedule,
    convolutional_gmm_path,
    convolutional_mc_score,
    dilation_score,
    geometric_score,
    interpolant_samples,
    recursive_cost,
)
from anneal_path.sampler import InitSpec, ParticleCloud, RunConfig, StepPolicy, run_annealed, run_plain, ula_step

__all__ = [
    "InputError",
    "NumericalError",
    "GaussianMixture",
    "GaussianParams",
    "gaussian_convolve",
    "gaussian_product",
    "gaussian_rescale",
    "gaussian_shift",
    "gmm_log_density",
    "gmm_sample",
    "gmm_score",
    "METRIC_NAMES",
    "DiagnosticsReport",
    "MetricConfig",
    "evaluate",
    "knn_kl",
    "ksd",
    "mmd",
    "mms",
    "occupied_modes",
    "sinkhorn_w2",
    "PATH_VARIANTS",
    "MCEstimatorConfig",
    "PathScore",
    "RecursiveCostModel",
    "Schedule",
    "convolutional_gmm_path",
    "convolutional_mc_score",
    "dilation_score",
    "geometric_score",
    "interpolant_samples",
    "recursive_cost",
    "InitSpec",
    "ParticleCloud",
    "RunConfig",
    "StepPolicy",
    "run_annealed",
    "run_plain",
    "ula_step",
]
