"""Noise covariance recovery and the noise, parallel and perpendicular subspaces.

The lag-0 covariance of the dynamical loadings cannot be estimated directly
because white noise inflates it.  Under a VAR(p) model it is reconstructed
from the nonzero-lag covariances (which the noise does not touch), giving
``Sigma_eps = Sigma_Y - psi^T Sigma_0 psi``.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .covariance import Kernel, _fix_signs, eigh_weighted, kernel_from_basis, lagged_autocov
from .exceptions import (
    DimensionMismatchError,
    NoPositiveEigenvaluesError,
    SeriesTooShortError,
    SingularMatrixError,
)
from .grid import CurveSeries, check_orthonormal, check_same_grid

COND_LIMIT = 1e12
DEFAULT_TAU = 0.01
ZERO_RTOL = 1e-12


@dataclass(frozen=True)
class LoadingSeries:
    """Proxy loadings ``chi_t`` (rows) on an orthonormal basis."""

    values: np.ndarray
    basis: CurveSeries

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[1] != self.basis.n:
            raise DimensionMismatchError(
                f"{self.values.shape} loadings do not match a {self.basis.n}-curve basis"
            )


@dataclass
class NoiseModel:
    sigma_eps_plus: Kernel
    noise_basis: CurveSeries
    noise_eigenvalues: np.ndarray
    d_eps: int
    sigma0_eta: np.ndarray
    par_basis: CurveSeries
    par_eigenvalues: np.ndarray
    d_par: int
    perp_basis: CurveSeries
    perp_eigenvalues: np.ndarray
    d_perp: int
    sigma_eps: Kernel = None


def proxy_loadings(Y, basis):
    """``chi_ti = <Y_t - Ybar, psi_i>``."""
    check_same_grid(Y.grid, basis.grid)
    check_orthonormal(basis)
    Z = Y.data - Y.data.mean(axis=0)
    return LoadingSeries(Y.grid.weight * Z @ basis.data.T, basis)


def loading_autocov(L, k):
    """``Sigma_k = sum_{t <= n-k} chi_t chi_{t+k}^T / (n - k - 1)`` of demeaned loadings.

    At ``k = 0`` the result still contains the noise contribution.
    """
    X = L.values if isinstance(L, LoadingSeries) else np.asarray(L, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    k = int(k)
    if k < 0:
        raise ValueError("k must be non-negative")
    if n - k < 2:
        raise SeriesTooShortError(f"lag {k} needs n - k >= 2, got n={n}")
    X = X - X.mean(axis=0)
    return X[: n - k].T @ X[k:] / (n - k - 1)


def _guarded_solve(A, B, name):
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularMatrixError(
            f"{name} is singular (condition number {cond:.3g} > {COND_LIMIT:g})",
            name=name,
            condition=cond,
        )
    return np.linalg.solve(A, B)


def reconstruct_sigma0(sig, p=1):
    """Lag-0 loading covariance from nonzero-lag covariances under VAR(p).

    Parameters
    ----------
    sig : sequence of (d, d) arrays
        ``sig[k-1]`` is the lag-``k`` covariance ``Sigma_k``; lags
        ``1..2`` are needed for ``p = 1`` and ``1..2p`` in general.
    p : int
        Assumed VAR order.

    Returns
    -------
    ndarray
        Symmetrized ``Sigma_0``.  For ``p = 1`` this is
        ``Sigma_1 Sigma_2^{-1} Sigma_1``.
    """
    p = int(p)
    if p < 1:
        raise ValueError("p must be positive")
    need = 2 * p
    sig = [np.atleast_2d(np.asarray(s, dtype=float)) for s in sig]
    if len(sig) < need:
        raise ValueError(f"VAR({p}) reconstruction needs lags 1..{need}, got {len(sig)}")
    d = sig[0].shape[0]
    for s in sig:
        if s.shape != (d, d):
            raise DimensionMismatchError("lagged covariances must all be d x d")
    S = {k + 1: sig[k] for k in range(need)}

    if p == 1:
        # Sigma_0 = Sigma_1 Sigma_2^{-1} Sigma_1
        S0 = S[1] @ _guarded_solve(S[2], S[1], "lag 2")
    else:
        # lags p+1..2p: Sigma_{p+1+i} = sum_l Sigma_{p+1+i-l} A_l^T
        lhs = np.vstack([S[p + 1 + i] for i in range(p)])
        block = np.block([[S[p + i - j] for j in range(p)] for i in range(p)])
        cond = np.linalg.cond(block)
        if not np.isfinite(cond) or cond > COND_LIMIT:
            warnings.warn(
                f"lag {p + 1}..{2 * p} Yule-Walker system is ill-conditioned "
                f"(condition {cond:.3g}); using a minimum-norm solution",
                RuntimeWarning,
                stacklevel=2,
            )
        coef_T = np.linalg.lstsq(block, lhs, rcond=None)[0]
        A_T = [coef_T[l * d : (l + 1) * d] for l in range(p)]
        R = S[p] - sum(S[p - l] @ A_T[l - 1] for l in range(1, p))
        # Sigma_0 A_p^T = R  <=>  A_p Sigma_0^T = R^T
        S0 = _guarded_solve(A_T[p - 1].T, R.T, f"lag-{p} coefficient").T
    return 0.5 * (S0 + S0.T)


def noise_covariance(Y, basis, sigma0_eta):
    """``Sigma_Y - psi^T Sigma_0 psi``; possibly indefinite."""
    check_same_grid(Y.grid, basis.grid)
    S0 = np.atleast_2d(np.asarray(sigma0_eta, dtype=float))
    d = basis.n
    if d == 0:
        return lagged_autocov(Y, 0)
    if S0.shape != (d, d):
        raise DimensionMismatchError(f"sigma0 has shape {S0.shape}, basis has {d} curves")
    if np.max(np.abs(S0 - S0.T)) > 1e-10 * max(1.0, np.max(np.abs(S0))):
        raise ValueError("sigma0_eta must be symmetric")
    SY = lagged_autocov(Y, 0).values
    SX = kernel_from_basis(basis.data, S0, Y.grid).values
    return Kernel(SY - SX, Y.grid, symmetric=True)


def _count_above(ratios, tau):
    # leading eigenvalues whose ratio meets the threshold (ratios descending)
    below = np.nonzero(ratios < tau)[0]
    return int(below[0]) if below.size else int(ratios.size)


def positive_part(sigma_eps, tau_deps=DEFAULT_TAU):
    """Truncate a noise covariance to its leading positive eigenpairs.

    ``d_eps`` is the number of leading eigenvalues whose share of the sum
    of all positive eigenvalues is at least ``tau_deps``.

    Returns
    -------
    sigma_plus : Kernel
    basis : CurveSeries
        Kept eigencurves.
    eigenvalues : ndarray
        Kept eigenvalues, descending.
    d_eps : int
    """
    grid = sigma_eps.grid
    evals, vecs = eigh_weighted(sigma_eps.values, grid.weight)
    positive = evals[evals > ZERO_RTOL * np.max(np.abs(evals))]
    if positive.size == 0:
        raise NoPositiveEigenvaluesError("noise covariance has no positive eigenvalues")
    ratios = positive / positive.sum()
    d_eps = min(_count_above(ratios, tau_deps), positive.size)
    kept_vals = evals[:d_eps]
    kept = vecs[:d_eps]
    sigma_plus = kernel_from_basis(kept, np.diag(kept_vals), grid)
    return sigma_plus, CurveSeries(kept, grid, allow_empty=True), kept_vals, d_eps


def omega_par_psi(sigma_plus, psi):
    """``int int psi(u) psi(v)^T Sigma_plus(u, v) du dv``."""
    w = psi.grid.weight
    return w * w * psi.data @ sigma_plus.values @ psi.data.T


def split_subspaces(
    sigma_plus,
    noise_basis,
    noise_eigenvalues,
    psi,
    tau_par=DEFAULT_TAU,
    tau_perp=DEFAULT_TAU,
):
    """Split the noise space into parts parallel and perpendicular to ``psi``.

    Both selections compare eigenvalues with the total noise variance
    ``Tr[Sigma_plus]``.  An empty parallel or perpendicular part is a valid
    outcome.

    Returns
    -------
    par_basis, par_eigenvalues, d_par, perp_basis, perp_eigenvalues, d_perp
    """
    grid = check_same_grid(sigma_plus.grid, noise_basis.grid, psi.grid)
    w = grid.weight
    total = sigma_plus.trace()
    lam = np.asarray(noise_eigenvalues, dtype=float)

    if psi.n and total > 0:
        om = omega_par_psi(sigma_plus, psi)
        vals, vecs = np.linalg.eigh(0.5 * (om + om.T))
        order = np.argsort(-vals, kind="stable")
        vals, vecs = vals[order], vecs[:, order]
        d_par = _count_above(vals / total, tau_par)
        par = (vecs[:, :d_par].T @ psi.data) if d_par else np.empty((0, grid.N))
        if d_par:
            par = _fix_signs(par.T).T
        par_vals = vals[:d_par]
    else:
        d_par, par, par_vals = 0, np.empty((0, grid.N)), np.empty(0)

    if noise_basis.n and total > 0:
        E = noise_basis.data
        if psi.n:
            E = E - (w * E @ psi.data.T) @ psi.data
        root = np.sqrt(np.clip(lam, 0.0, None))
        G = root[:, None] * (w * E @ E.T) * root[None, :]
        vals, vecs = np.linalg.eigh(0.5 * (G + G.T))
        order = np.argsort(-vals, kind="stable")
        vals, vecs = vals[order], vecs[:, order]
        d_perp = _count_above(vals / total, tau_perp)
        if d_perp:
            curves = (E.T * root) @ vecs[:, :d_perp] / np.sqrt(vals[:d_perp])
            perp = _fix_signs(curves).T
        else:
            perp = np.empty((0, grid.N))
        perp_vals = vals[:d_perp]
    else:
        d_perp, perp, perp_vals = 0, np.empty((0, grid.N)), np.empty(0)

    return (
        CurveSeries(par, grid, allow_empty=True),
        par_vals,
        d_par,
        CurveSeries(perp, grid, allow_empty=True),
        perp_vals,
        d_perp,
    )


def estimate_noise_model(
    Y,
    psi,
    p=1,
    tau_eps=DEFAULT_TAU,
    tau_par=DEFAULT_TAU,
    tau_perp=DEFAULT_TAU,
):
    """Run the full noise-structure estimation for a given dynamical basis."""
    d = psi.n
    if d:
        L = proxy_loadings(Y, psi)
        lags = [loading_autocov(L, k) for k in range(1, 2 * p + 1)]
        S0 = reconstruct_sigma0(lags, p)
    else:
        S0 = np.zeros((0, 0))
    sigma_eps = noise_covariance(Y, psi, S0)
    sigma_plus, noise_basis, noise_vals, d_eps = positive_part(sigma_eps, tau_eps)
    par, par_vals, d_par, perp, perp_vals, d_perp = split_subspaces(
        sigma_plus, noise_basis, noise_vals, psi, tau_par, tau_perp
    )
    return NoiseModel(
        sigma_eps_plus=sigma_plus,
        noise_basis=noise_basis,
        noise_eigenvalues=noise_vals,
        d_eps=d_eps,
        sigma0_eta=S0,
        par_basis=par,
        par_eigenvalues=par_vals,
        d_par=d_par,
        perp_basis=perp,
        perp_eigenvalues=perp_vals,
        d_perp=d_perp,
        sigma_eps=sigma_eps,
    )


def population_split(sigma_eps, psi, rtol=1e-9):
    """Exact subspaces of a known noise covariance (no thresholding beyond ``rtol``)."""
    sigma_plus, basis, vals, _ = positive_part(sigma_eps, rtol)
    return split_subspaces(sigma_plus, basis, vals, psi, rtol, rtol)

