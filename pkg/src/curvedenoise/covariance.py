"""Sample means, lagged autocovariance kernels and the DFPCA operator.

Kernels are stored as their values on the grid, ``K[i, j] = K(u_i, u_j)``.
The integral operator acts as ``(K f)(u_i) = w * sum_j K[i, j] f(u_j)``, so
the discrete eigenproblem is that of ``w * K`` and eigencurves are rescaled
by ``1 / sqrt(w)`` to have unit discrete norm.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    AllZeroCoefficientsError,
    AsymmetricKernelError,
    EmptySeriesError,
    SeriesTooShortError,
)
from .grid import Curve, CurveSeries, Grid, check_same_grid

SYMMETRY_TOL = 1e-10


def _asymmetry(values):
    scale = np.max(np.abs(values)) if values.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(values - values.T)) / scale)


@dataclass(frozen=True)
class Kernel:
    """Values of a bivariate kernel on ``grid x grid``."""

    values: np.ndarray
    grid: Grid
    symmetric: bool = field(default=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        N = self.grid.N
        if values.shape != (N, N):
            raise ValueError(f"kernel has shape {values.shape}, grid needs ({N}, {N})")
        if not np.all(np.isfinite(values)):
            raise ValueError("kernel contains non-finite values")
        if self.symmetric and _asymmetry(values) > SYMMETRY_TOL:
            raise AsymmetricKernelError(
                f"kernel flagged symmetric but relative asymmetry is {_asymmetry(values):.3g}"
            )
        object.__setattr__(self, "values", values)

    def apply(self, f):
        """Apply the integral operator to a curve or to every row of a series."""
        check_same_grid(self.grid, f.grid)
        w = self.grid.weight
        if isinstance(f, Curve):
            return Curve(w * (self.values @ f.values), self.grid)
        return CurveSeries(w * (f.data @ self.values.T), self.grid, allow_empty=True)

    def trace(self):
        """``int K(u, u) du``."""
        return float(self.grid.weight * np.trace(self.values))

    @property
    def T(self):
        return Kernel(self.values.T, self.grid, self.symmetric)


@dataclass(frozen=True)
class Spectrum:
    """Leading eigenpairs of a symmetric kernel, eigenvalues descending."""

    eigenvalues: np.ndarray
    eigencurves: CurveSeries

    def clamped(self):
        """Eigenvalues with negative round-off clamped to zero, for reporting."""
        return np.clip(self.eigenvalues, 0.0, None)


def kernel_from_basis(basis_data, matrix, grid, symmetric=True):
    """Kernel ``sum_ab basis_a(u) matrix_ab basis_b(v)``."""
    values = basis_data.T @ np.asarray(matrix, dtype=float) @ basis_data
    if symmetric:
        values = 0.5 * (values + values.T)
    return Kernel(values, grid, symmetric=symmetric)


def sample_mean(Y):
    """Pointwise average curve of a series."""
    if Y.n < 1:
        raise EmptySeriesError("cannot average an empty series")
    return Curve(Y.data.mean(axis=0), Y.grid)


def _centered(Y):
    return Y.data - Y.data.mean(axis=0)


def _lagged(Z, k):
    n = Z.shape[0]
    if n - k < 2:
        raise SeriesTooShortError(f"lag {k} needs n - k >= 2, got n={n}")
    if k == 0:
        return (Z.T @ Z) / (n - 1)
    return (Z[: n - k].T @ Z[k:]) / (n - k - 1)


def lagged_autocov(Y, k):
    """Lag-``k`` sample autocovariance kernel ``M_k(u, v)``.

    Uses the divisor ``n - k - 1``; ``k = 0`` gives the sample covariance
    with divisor ``n - 1``.  ``M_{-k}`` is the transpose of ``M_k``.
    """
    k = int(k)
    if k < 0:
        raise ValueError("k must be non-negative; use the transpose for negative lags")
    M = _lagged(_centered(Y), k)
    if k == 0:
        M = 0.5 * (M + M.T)
        return Kernel(M, Y.grid, symmetric=True)
    return Kernel(M, Y.grid)


def dfpca_matrix(Z, weight, q, c):
    """DFPCA operator values from already centered data ``Z`` (raw arrays)."""
    N = Z.shape[1]
    K = np.zeros((N, N))
    for lag, coef in zip(range(1, q + 1), c):
        if coef == 0:
            continue
        M = _lagged(Z, lag)
        K += coef * weight * (M @ M.T)
    return 0.5 * (K + K.T)


def _check_dfpca_args(n, q, c):
    q = int(q)
    if q < 1:
        raise ValueError("q must be a positive integer")
    c = np.asarray(c, dtype=float).ravel()
    if c.shape != (q,):
        raise ValueError(f"need {q} coefficients, got {c.size}")
    if not np.any(c != 0):
        raise AllZeroCoefficientsError("at least one DFPCA coefficient must be nonzero")
    if n - q < 2:
        raise SeriesTooShortError(f"DFPCA with q={q} needs n - q >= 2, got n={n}")
    return q, c


def dfpca_kernel(Y, q=2, c=(1.0, 1.0)):
    """The operator ``K = sum_l c_l N_l`` with ``N_k = int M_k(u, z) M_k(v, z) dz``.

    Parameters
    ----------
    Y : CurveSeries
        Observed curves.
    q : int
        Largest lag used.
    c : array_like of length q
        Lag weights, not all zero.
    """
    q, c = _check_dfpca_args(Y.n, q, c)
    K = dfpca_matrix(_centered(Y), Y.grid.weight, q, c)
    return Kernel(K, Y.grid, symmetric=True)


def _fix_signs(vectors):
    # vectors: columns; make the entry of largest magnitude positive
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def eigh_weighted(values, weight, m=None):
    """Top-``m`` eigenpairs of ``weight * values`` (raw arrays).

    Returns eigenvalues in descending order and eigencurves as rows with
    unit discrete norm.
    """
    A = weight * 0.5 * (values + values.T)
    evals, evecs = np.linalg.eigh(A)
    order = np.argsort(-evals, kind="stable")
    if m is not None:
        order = order[:m]
    evecs = _fix_signs(evecs[:, order])
    return evals[order], evecs.T / np.sqrt(weight)


def eig_sym(K, m=None):
    """Leading ``m`` eigenpairs of a symmetric kernel.

    Eigencurves are orthonormal under :func:`~curvedenoise.grid.inner_product`
    and sign-normalized so that the entry of largest magnitude is positive.
    """
    if _asymmetry(K.values) > SYMMETRY_TOL:
        raise AsymmetricKernelError(
            f"relative asymmetry {_asymmetry(K.values):.3g} exceeds {SYMMETRY_TOL:g}"
        )
    N = K.grid.N
    if m is None:
        m = N
    if m < 1:
        raise ValueError("m must be positive")
    evals, curves = eigh_weighted(K.values, K.grid.weight, min(int(m), N))
    return Spectrum(evals, CurveSeries(curves, K.grid))
