"""Dimension and basis of the dynamical space via bootstrap eigenvalue tests."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .covariance import _check_dfpca_args, dfpca_matrix, eigh_weighted
from .grid import CurveSeries

DEFAULT_Q = 2
DEFAULT_C = (1.0, 1.0)
DEFAULT_B = 100
DEFAULT_ALPHA = 0.05
MAX_D_START = 20
D_START_RATIO = 1e-6
# eigenvalues below this fraction of the largest are treated as exact zeros
ZERO_EIG_RTOL = 1e-12


@dataclass
class DynSpaceEstimate:
    """Estimated dynamical space.

    Attributes
    ----------
    d_hat : int
        Estimated dimension.
    basis : CurveSeries
        The first ``d_hat`` eigencurves of the DFPCA operator (may be empty).
    eigenvalues : ndarray
        All eigenvalues of the DFPCA operator, descending.
    test_trace : list of (int, bool, int)
        ``(d0, rejected, exceed_count)`` for every bootstrap test run, in order.
    """

    d_hat: int
    basis: CurveSeries
    eigenvalues: np.ndarray
    test_trace: list = field(default_factory=list)


def _zeroed(evals):
    top = np.max(np.abs(evals)) if evals.size else 0.0
    out = evals.copy()
    out[np.abs(out) <= ZERO_EIG_RTOL * top] = 0.0
    return out


def _dfpca_eigs(data, weight, q, c, m=None):
    Z = data - data.mean(axis=0)
    return eigh_weighted(dfpca_matrix(Z, weight, q, c), weight, m)


def _replicate_rng(seed, d0, b):
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(d0), int(b)]))


def _bootstrap_eigenvalue(fitted, resid, weight, q, c, d0, seed, b):
    rng = _replicate_rng(seed, d0, b)
    n = resid.shape[0]
    Ystar = fitted + resid[rng.integers(0, n, size=n)]
    Z = Ystar - Ystar.mean(axis=0)
    evals = np.linalg.eigvalsh(weight * dfpca_matrix(Z, weight, q, c))[::-1]
    return _zeroed(evals)[d0]


def _bootstrap(data, weight, evals, vecs, d0, q, c, B, alpha, seed, jobs):
    Z = data - data.mean(axis=0)
    psi = vecs[:d0]
    fitted = (weight * Z @ psi.T) @ psi if d0 > 0 else np.zeros_like(data)
    resid = data - fitted
    observed = _zeroed(evals)[d0]

    def one(b):
        return _bootstrap_eigenvalue(fitted, resid, weight, q, c, d0, seed, b)

    if jobs is not None and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            stars = np.array(list(pool.map(one, range(B))))
    else:
        stars = np.array([one(b) for b in range(B)])
    count = int(np.sum(observed > stars))
    return count > (1.0 - alpha) * B, count


def bootstrap_test(
    Y, d0, q=DEFAULT_Q, c=DEFAULT_C, B=DEFAULT_B, alpha=DEFAULT_ALPHA, seed=0, jobs=None
):
    """Bootstrap test of ``H0: lambda_{d0+1} = 0`` for the DFPCA operator.

    The observed curves are split into a rank-``d0`` fit plus residual
    curves; residual curves are resampled with replacement (whole rows) and
    the ``(d0+1)``-th eigenvalue is recomputed for each of ``B`` replicates.

    Returns
    -------
    reject : bool
        True when the observed eigenvalue exceeds the bootstrap one more
        than ``(1 - alpha) B`` times.
    exceed_count : int
    """
    if B < 1:
        raise ValueError("B must be at least 1")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    d0 = int(d0)
    if d0 < 0 or d0 >= Y.grid.N:
        raise ValueError(f"d0 must lie in [0, N), got {d0}")
    q, c = _check_dfpca_args(Y.n, q, c)
    w = Y.grid.weight
    evals, vecs = _dfpca_eigs(Y.data, w, q, c)
    return _bootstrap(Y.data, w, evals, vecs, d0, q, c, int(B), alpha, seed, jobs)


def default_d_start(evals, N):
    """Smallest ``d0`` with ``lambda_{d0+1} / lambda_1 < 1e-6``, capped at 20."""
    top = evals[0] if evals.size else 0.0
    cap = min(MAX_D_START, N - 1)
    if top <= 0:
        return 0
    for d0 in range(cap + 1):
        if evals[d0] / top < D_START_RATIO:
            return d0
    return cap


def dynamical_basis(Y, d, q=DEFAULT_Q, c=DEFAULT_C):
    """First ``d`` DFPCA eigencurves with the full eigenvalue list (no testing)."""
    q, c = _check_dfpca_args(Y.n, q, c)
    evals, vecs = _dfpca_eigs(Y.data, Y.grid.weight, q, c)
    return CurveSeries(vecs[:d], Y.grid, allow_empty=True), evals


def estimate_dynspace(
    Y,
    q=DEFAULT_Q,
    c=DEFAULT_C,
    B=DEFAULT_B,
    alpha=DEFAULT_ALPHA,
    d_start=None,
    seed=0,
    jobs=None,
):
    """Estimate the dynamical-space dimension by a descending test cascade.

    Starting from ``d0 = d_start``, ``H0: lambda_{d0+1} = 0`` is tested and
    ``d0`` lowered while the hypothesis survives.  The first rejection at
    ``d0`` gives ``d_hat = d0 + 1``; if even ``d0 = 0`` survives, ``d_hat = 0``.
    """
    q, c = _check_dfpca_args(Y.n, q, c)
    w = Y.grid.weight
    evals, vecs = _dfpca_eigs(Y.data, w, q, c)
    if d_start is None:
        d_start = default_d_start(evals, Y.grid.N)
    d_start = int(d_start)
    if not 0 <= d_start < Y.grid.N:
        raise ValueError(f"d_start must lie in [0, N), got {d_start}")

    trace = []
    d_hat = 0
    for d0 in range(d_start, -1, -1):
        reject, count = _bootstrap(Y.data, w, evals, vecs, d0, q, c, int(B), alpha, seed, jobs)
        trace.append((d0, bool(reject), count))
        if reject:
            d_hat = d0 + 1
            break
    basis = CurveSeries(vecs[:d_hat], Y.grid, allow_empty=True)
    return DynSpaceEstimate(d_hat, basis, evals, trace)
