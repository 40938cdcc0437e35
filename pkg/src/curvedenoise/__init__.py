"""Denoising of curve time series by MISE-optimal projection onto the dynamical space."""

from .covariance import Kernel, dfpca_kernel, eig_sym, lagged_autocov, sample_mean
from .denoise import (
    DenoiseResult,
    DenoiserConfig,
    denoise_mise_optimal,
    denoise_orthogonal,
    fit_denoiser,
    mise_minimum,
    noise_level,
    omega_matrices,
    run_denoising,
)
from .dynspace import bootstrap_test, estimate_dynspace
from .grid import Curve, CurveSeries, Grid, inner_product, make_grid, project
from .noisemodel import (
    estimate_noise_model,
    loading_autocov,
    noise_covariance,
    positive_part,
    proxy_loadings,
    reconstruct_sigma0,
    split_subspaces,
)
from .simulation import (
    DgpConfig,
    ExperimentResult,
    generate_dataset,
    run_denoising_experiment,
    run_forecast_experiment,
    shuffle_check,
    theoretical_bounds,
)
from .var import VarModel, fit_var, forecast_one_step, random_stable_var, simulate_var

__version__ = "0.1.0"

__all__ = [
    "Curve",
    "CurveSeries",
    "DenoiseResult",
    "DenoiserConfig",
    "DgpConfig",
    "ExperimentResult",
    "Grid",
    "Kernel",
    "VarModel",
    "bootstrap_test",
    "denoise_mise_optimal",
    "denoise_orthogonal",
    "dfpca_kernel",
    "eig_sym",
    "estimate_dynspace",
    "estimate_noise_model",
    "fit_denoiser",
    "fit_var",
    "forecast_one_step",
    "generate_dataset",
    "inner_product",
    "lagged_autocov",
    "loading_autocov",
    "make_grid",
    "mise_minimum",
    "noise_covariance",
    "noise_level",
    "omega_matrices",
    "positive_part",
    "project",
    "proxy_loadings",
    "random_stable_var",
    "reconstruct_sigma0",
    "run_denoising",
    "run_denoising_experiment",
    "run_forecast_experiment",
    "sample_mean",
    "shuffle_check",
    "simulate_var",
    "split_subspaces",
    "theoretical_bounds",
]
