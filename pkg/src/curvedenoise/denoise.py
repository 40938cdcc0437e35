"""Orthogonal and MISE-optimal denoising of curve time series.

Orthogonal denoising projects each observed curve onto the dynamical space.
MISE-optimal denoising additionally regresses the noise component lying in
the dynamical space on the observable perpendicular residual and subtracts
the fitted conditional mean.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .covariance import lagged_autocov
from .dynspace import (
    DEFAULT_ALPHA,
    DEFAULT_B,
    DEFAULT_C,
    DEFAULT_Q,
    DynSpaceEstimate,
    dynamical_basis,
    estimate_dynspace,
)
from .exceptions import SingularMatrixError, ZeroVarianceError
from .grid import CurveSeries, check_orthonormal, check_same_grid
from .noisemodel import COND_LIMIT, DEFAULT_TAU, NoiseModel, estimate_noise_model

METHODS = ("orthogonal", "mise_optimal")
WARN_COND = 1e8


@dataclass(frozen=True)
class OmegaSet:
    """Noise covariances in the parallel/perpendicular bases and the regression slope.

    ``alpha_hat = -omega_par_perp @ inv(omega_perp)``.
    """

    omega_par: np.ndarray
    omega_perp: np.ndarray
    omega_par_perp: np.ndarray
    alpha_hat: np.ndarray

    @property
    def d_par(self):
        return self.omega_par.shape[0]

    @property
    def d_perp(self):
        return self.omega_perp.shape[0]


@dataclass
class DenoiseResult:
    denoised: CurveSeries
    method: str
    mise_min_estimate: float
    lambda_hat: float
    removed_variance: float
    lambda_trace: float = float("nan")
    diagnostics: dict = field(default_factory=dict)


def _solve_omega_perp(omega_perp, rhs):
    cond = np.linalg.cond(omega_perp)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularMatrixError(
            f"omega_perp is singular (condition number {cond:.3g})",
            name="omega_perp",
            condition=cond,
        )
    if cond > WARN_COND:
        warnings.warn(
            f"omega_perp is nearly singular (condition number {cond:.3g}); "
            "denoising may be poor",
            RuntimeWarning,
            stacklevel=3,
        )
    return np.linalg.solve(omega_perp, rhs)


def omega_matrices(sigma_eps_plus, par_basis, perp_basis):
    """Double-quadrature contractions of the noise covariance with both bases."""
    grid = check_same_grid(sigma_eps_plus.grid, par_basis.grid, perp_basis.grid)
    check_orthonormal(par_basis)
    check_orthonormal(perp_basis)
    w2 = grid.weight**2
    S = sigma_eps_plus.values
    P, Q = par_basis.data, perp_basis.data
    om_par = w2 * P @ S @ P.T
    om_perp = w2 * Q @ S @ Q.T
    om_pp = w2 * P @ S @ Q.T
    om_par = 0.5 * (om_par + om_par.T)
    om_perp = 0.5 * (om_perp + om_perp.T)
    if Q.shape[0] and P.shape[0]:
        alpha = -_solve_omega_perp(om_perp, om_pp.T).T
    else:
        alpha = np.zeros((P.shape[0], Q.shape[0]))
    return OmegaSet(om_par, om_perp, om_pp, alpha)


def denoise_orthogonal(Y, psi):
    """Project every observed curve orthogonally onto ``span(psi)``."""
    check_same_grid(Y.grid, psi.grid)
    check_orthonormal(psi)
    coeffs = Y.grid.weight * Y.data @ psi.data.T
    return CurveSeries(coeffs @ psi.data, Y.grid)


def denoise_mise_optimal(Y, psi, omegas, par_basis, perp_basis):
    """MISE-optimal reconstruction of the signal curves.

    ``X_t = P Y_t - phi_par^T Omega_par_perp Omega_perp^{-1} <phi_perp, Y_t - P Y_t>``.
    Falls back to orthogonal denoising when either noise subspace is empty.
    """
    check_same_grid(Y.grid, psi.grid, par_basis.grid, perp_basis.grid)
    Ypar = denoise_orthogonal(Y, psi)
    if par_basis.n == 0 or perp_basis.n == 0:
        return Ypar
    if omegas.alpha_hat.shape != (par_basis.n, perp_basis.n):
        raise ValueError("omega set does not match the parallel/perpendicular bases")
    w = Y.grid.weight
    eperp = w * (Y.data - Ypar.data) @ perp_basis.data.T
    correction = eperp @ omegas.alpha_hat.T @ par_basis.data
    return CurveSeries(Ypar.data + correction, Y.grid)


def mise_minimum(omegas):
    """Population minimum of the MISE for both denoisers, clamped at zero.

    Returns
    -------
    opt_min : float
        ``Tr[Omega_par] - Tr[Omega_perp^{-1} Omega_par_perp^T Omega_par_perp]``
    ortho_min : float
        ``Tr[Omega_par]``
    """
    ortho = float(np.trace(omegas.omega_par))
    if omegas.d_par and omegas.d_perp:
        pp = omegas.omega_par_perp
        gain = float(np.trace(_solve_omega_perp(omegas.omega_perp, pp.T @ pp)))
    else:
        gain = 0.0
    return max(ortho - gain, 0.0), max(ortho, 0.0)


def mean_integrated_sq(A, B, grid):
    """``mean_t (1/|I|) int (A_t - B_t)^2 du`` over the rows of two arrays."""
    diff = np.asarray(A) - np.asarray(B)
    return float(grid.weight * np.sum(diff * diff) / diff.shape[0] / grid.width)


def integrated_variance(Y):
    """``(1/|I|) int Var[Y_t(u)] du`` with the demeaned sample variance."""
    return lagged_autocov(Y, 0).trace() / Y.grid.width


def noise_decomposition(removed, remaining, var_y=1.0):
    """Noise level and removed share from the removed/remaining MISE split."""
    total = removed + remaining
    share = removed / total if total > 0 else float("nan")
    return total / var_y, share


def noise_level(Y, X_opt, opt_min, sigma_eps_plus=None):
    """Estimate the noise level ``lambda``.

    Returns
    -------
    lambda_resid : float
        ``(opt_min + Ebar[(Y - X_opt)^2]) / Varbar[Y]``.
    lambda_trace : float
        ``Tr[Sigma_eps_plus] / Varbar[Y]``, or NaN without a kernel.
    """
    check_same_grid(Y.grid, X_opt.grid)
    if Y.data.shape != X_opt.data.shape:
        raise ValueError("observed and denoised series must have the same shape")
    var = integrated_variance(Y)
    if not var > 0:
        raise ZeroVarianceError("observed curves have zero integrated variance")
    removed = mean_integrated_sq(Y.data, X_opt.data, Y.grid)
    lam_resid = (opt_min / Y.grid.width + removed) / var
    if sigma_eps_plus is None:
        lam_trace = float("nan")
    else:
        lam_trace = sigma_eps_plus.trace() / Y.grid.width / var
    return lam_resid, lam_trace


@dataclass
class DenoiserConfig:
    """Estimation knobs; defaults are the tuning values used in the simulations."""

    q: int = DEFAULT_Q
    c: tuple = DEFAULT_C
    B: int = DEFAULT_B
    alpha: float = DEFAULT_ALPHA
    p: int = 1
    tau_eps: float = DEFAULT_TAU
    tau_par: float = DEFAULT_TAU
    tau_perp: float = DEFAULT_TAU
    d: int = None
    d_start: int = None
    seed: int = 0
    jobs: int = None


@dataclass
class FittedDenoiser:
    """Everything estimated from one observed series."""

    psi: CurveSeries
    dynspace: DynSpaceEstimate
    noise: NoiseModel
    omegas: OmegaSet

    def denoise(self, Y, method="mise_optimal"):
        if method == "orthogonal":
            return denoise_orthogonal(Y, self.psi)
        if method == "mise_optimal":
            return denoise_mise_optimal(
                Y, self.psi, self.omegas, self.noise.par_basis, self.noise.perp_basis
            )
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")


def fit_denoiser(Y, config=None):
    """Estimate the dynamical space, noise structure and regression matrices."""
    cfg = config or DenoiserConfig()
    if cfg.d is None:
        dyn = estimate_dynspace(
            Y, cfg.q, cfg.c, cfg.B, cfg.alpha, cfg.d_start, cfg.seed, cfg.jobs
        )
    else:
        basis, evals = dynamical_basis(Y, int(cfg.d), cfg.q, cfg.c)
        dyn = DynSpaceEstimate(int(cfg.d), basis, evals, [])
    noise = estimate_noise_model(
        Y, dyn.basis, cfg.p, cfg.tau_eps, cfg.tau_par, cfg.tau_perp
    )
    omegas = omega_matrices(noise.sigma_eps_plus, noise.par_basis, noise.perp_basis)
    return FittedDenoiser(dyn.basis, dyn, noise, omegas)


def run_denoising(Y, method="mise_optimal", config=None, fitted=None):
    """Fit (unless ``fitted`` is given) and denoise, with noise-level diagnostics."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    fit = fitted or fit_denoiser(Y, config)
    X = fit.denoise(Y, method)
    opt_min, ortho_min = mise_minimum(fit.omegas)
    floor = ortho_min if method == "orthogonal" else opt_min
    lam, lam_trace = noise_level(Y, X, floor, fit.noise.sigma_eps_plus)
    removed = mean_integrated_sq(Y.data, X.data, Y.grid)
    diagnostics = {
        "d_hat": fit.dynspace.d_hat,
        "d_eps": fit.noise.d_eps,
        "d_par": fit.noise.d_par,
        "d_perp": fit.noise.d_perp,
        "mise_min_opt": opt_min,
        "mise_min_ortho": ortho_min,
        "removed": removed,
        "remaining": floor / Y.grid.width,
        "removed_proportion": noise_decomposition(removed, floor / Y.grid.width)[1],
        "variance_y": integrated_variance(Y),
        "test_trace": [list(t) for t in fit.dynspace.test_trace],
    }
    return DenoiseResult(X, method, floor, lam, removed, lam_trace, diagnostics)
