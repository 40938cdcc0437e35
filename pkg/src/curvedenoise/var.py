"""Vector autoregressions: representation, simulation, fitting and forecasting."""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_discrete_lyapunov

from .exceptions import (
    InsufficientHistoryError,
    NonStationaryModelError,
    RankDeficientError,
    RetryLimitExceededError,
    SeriesTooShortError,
)

DEFAULT_BURN_IN = 500
MAX_DRAWS = 1000
PSD_TOL = 1e-12


@dataclass(frozen=True)
class VarModel:
    """Zero-mean VAR(p) model ``xi_t = sum_l A_l xi_{t-l} + e_t``, ``e_t ~ N(0, Omega)``."""

    coeffs: tuple
    innovation_cov: np.ndarray

    def __post_init__(self):
        coeffs = tuple(np.atleast_2d(np.asarray(A, dtype=float)) for A in self.coeffs)
        if not coeffs:
            raise ValueError("a VAR model needs at least one coefficient matrix")
        d = coeffs[0].shape[0]
        for A in coeffs:
            if A.shape != (d, d):
                raise ValueError("coefficient matrices must all be d x d")
        om = np.atleast_2d(np.asarray(self.innovation_cov, dtype=float))
        if om.shape != (d, d):
            raise ValueError(f"innovation covariance must be {d} x {d}")
        if np.max(np.abs(om - om.T)) > 1e-10 * max(1.0, np.max(np.abs(om))):
            raise ValueError("innovation covariance must be symmetric")
        om = 0.5 * (om + om.T)
        if np.linalg.eigvalsh(om)[0] < -PSD_TOL * max(1.0, np.max(np.abs(om))):
            raise ValueError("innovation covariance must be positive semi-definite")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "innovation_cov", om)

    @property
    def p(self):
        return len(self.coeffs)

    @property
    def d(self):
        return self.coeffs[0].shape[0]

    def companion(self):
        d, p = self.d, self.p
        C = np.zeros((d * p, d * p))
        C[:d] = np.hstack(self.coeffs)
        C[d:, :-d] = np.eye(d * (p - 1))
        return C

    def spectral_radius(self):
        return float(np.max(np.abs(np.linalg.eigvals(self.companion()))))

    @property
    def stationary(self):
        return self.spectral_radius() < 1.0

    def stationary_cov(self):
        """Lag-0 covariance ``Sigma_0`` of the stationary process."""
        return self._state_cov()[: self.d, : self.d]

    def _state_cov(self):
        """Stationary covariance of the stacked state ``(xi_t, ..., xi_{t-p+1})``."""
        if not self.stationary:
            raise NonStationaryModelError(
                f"spectral radius {self.spectral_radius():.6g} is not below one"
            )
        d, p = self.d, self.p
        Q = np.zeros((d * p, d * p))
        Q[:d, :d] = self.innovation_cov
        S = solve_discrete_lyapunov(self.companion(), Q)
        S = 0.5 * (S + S.T)
        return S

    def autocov(self, k):
        """``Sigma_k = E[xi_t xi_{t+k}^T]`` of the stationary process."""
        d = self.d
        big = self._state_cov()
        C = self.companion()
        lagged = np.linalg.matrix_power(C, int(k)) @ big
        return lagged[:d, :d].T


def simulate_var(model, n, burn_in=DEFAULT_BURN_IN, seed=None):
    """Simulate ``n`` observations (rows) after discarding ``burn_in`` draws.

    The initial state is drawn from the stationary distribution.
    """
    n, burn_in = int(n), int(burn_in)
    if n < 1:
        raise ValueError("n must be positive")
    if burn_in < 0:
        raise ValueError("burn_in must be non-negative")
    big = model._state_cov()
    rng = np.random.default_rng(seed)
    d, p = model.d, model.p
    state = rng.multivariate_normal(np.zeros(d * p), big, method="eigh")
    hist = [state[l * d : (l + 1) * d] for l in range(p)]
    total = burn_in + n
    innov = rng.multivariate_normal(np.zeros(d), model.innovation_cov, size=total, method="eigh")
    out = np.empty((total, d))
    for t in range(total):
        x = innov[t].copy()
        for l, A in enumerate(model.coeffs):
            x += A @ hist[l]
        hist = [x] + hist[:-1]
        out[t] = x
    return out[burn_in:]


def random_stable_var(d, lambdas, rho, seed=None, max_draws=MAX_DRAWS):
    """Random VAR(1) with spectral radius ``rho`` and stationary covariance ``diag(lambdas)``.

    Coefficient matrices with i.i.d. standard normal entries are rescaled to
    the requested spectral radius and redrawn until
    ``Omega = Sigma_0 - A Sigma_0 A^T`` is positive semi-definite.
    """
    d = int(d)
    lam = np.asarray(lambdas, dtype=float).ravel()
    if lam.shape != (d,) or np.any(lam <= 0):
        raise ValueError("lambdas must be d positive values")
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    S0 = np.diag(lam)
    for _ in range(int(max_draws)):
        A = rng.standard_normal((d, d))
        radius = np.max(np.abs(np.linalg.eigvals(A)))
        if radius == 0:
            continue
        A *= rho / radius
        om = S0 - A @ S0 @ A.T
        om = 0.5 * (om + om.T)
        if np.linalg.eigvalsh(om)[0] >= 0:
            return VarModel((A,), om)
    raise RetryLimitExceededError(f"no PSD innovation covariance in {max_draws} draws")


def fit_var(series, p=1):
    """Least-squares VAR(p) fit without intercept.

    The innovation covariance uses the divisor ``n - p - d p``.
    """
    X = np.asarray(series, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, d = X.shape
    p = int(p)
    if p < 1:
        raise ValueError("p must be positive")
    if n <= d * p + 2:
        raise SeriesTooShortError(f"need n > d p + 2 = {d * p + 2}, got n={n}")
    target = X[p:]
    regressors = np.hstack([X[p - l : n - l] for l in range(1, p + 1)])
    rank = np.linalg.matrix_rank(regressors)
    if rank < d * p:
        raise RankDeficientError(f"regressor matrix has rank {rank} < {d * p}")
    B = np.linalg.lstsq(regressors, target, rcond=None)[0]
    coeffs = tuple(B[l * d : (l + 1) * d].T for l in range(p))
    resid = target - regressors @ B
    om = resid.T @ resid / (n - p - d * p)
    return VarModel(coeffs, 0.5 * (om + om.T))


def forecast_one_step(model, history):
    """``sum_l A_l xi_{t-l}`` from the last ``p`` rows of ``history`` (oldest first)."""
    H = np.asarray(history, dtype=float)
    if H.ndim == 1:
        H = H[:, None] if model.d == 1 else H[None, :]
    if H.shape[0] < model.p:
        raise InsufficientHistoryError(f"need {model.p} past values, got {H.shape[0]}")
    return sum(A @ H[-l] for l, A in enumerate(model.coeffs, start=1))


def forecast_series(model, series):
    """In-sample one-step forecasts for ``t = p..n-1`` (rows)."""
    X = np.asarray(series, dtype=float)
    n, p = X.shape[0], model.p
    out = np.zeros((n - p, model.d))
    for l, A in enumerate(model.coeffs, start=1):
        out += X[p - l : n - l] @ A.T
    return out


PAPER_D2 = VarModel(
    (
        np.array([[0.14275022, -0.61629756], [-0.4615736, -0.49825869]]),
    ),
    np.array([[0.60977113, -0.01529231], [-0.01529231, 0.00121252]]),
)

PAPER_D4 = VarModel(
    (
        np.array(
            [
                [-0.40475218, 0.56881667, -0.01251201, -0.33319225],
                [0.36328118, 0.23656237, 0.17826015, 0.47609812],
                [0.04062105, -0.13439131, -0.3596354, -0.24931481],
                [-0.31412948, 0.08911365, -0.36549673, 0.20076313],
            ]
        ),
    ),
    np.array(
        [
            [0.39050087, 0.06370578, 0.0340153, -0.10433378],
            [0.06370578, 0.35412048, 0.05387206, 0.07341199],
            [0.0340153, 0.05387206, 0.2960237, -0.02286662],
            [-0.10433378, 0.07341199, -0.02286662, 0.06964716],
        ]
    ),
)

PAPER_D6 = VarModel(
    (
        np.array(
            [
                [0.37504966, 0.08142893, -0.07435684, -0.03887785, 0.25655029, 0.25170869],
                [-0.14126954, -0.19192149, -0.0982056, -0.37670302, 0.16884435, -0.38686508],
                [0.00451676, -0.32514261, -0.22975774, 0.12353677, 0.27258333, 0.26566839],
                [0.44140703, -0.08094657, 0.05391765, -0.09386828, 0.03307928, -0.14231888],
                [0.3419833, -0.20556356, 0.19934397, 0.08967538, 0.0027988, 0.22842928],
                [0.01997925, 0.10989784, 0.29140585, -0.007507, 0.38542961, 0.19185898],
            ]
        ),
    ),
    np.array(
        [
            [0.56177209, 0.04343599, -0.0262747, -0.10676641, -0.0826483, -0.03922044],
            [0.04343599, 0.46386005, -0.02291322, 0.01014503, 0.05098028, 0.02312988],
            [-0.0262747, -0.02291322, 0.36764981, -0.00149778, -0.03508077, 0.01351097],
            [-0.10676641, 0.01014503, -0.00149778, 0.25032321, -0.11118431, -0.00733749],
            [-0.0826483, 0.05098028, -0.03508077, -0.11118431, 0.15925535, -0.02909279],
            [-0.03922044, 0.02312988, 0.01351097, -0.00733749, -0.02909279, 0.09806406],
        ]
    ),
)

ALTERNATIVE_RHO = 0.95
ALTERNATIVE_SEED = 20240607


def loading_variances(d):
    """Stationary loading variances, linear from 0.7 down to 0.2."""
    d = int(d)
    if d == 1:
        return np.array([0.7])
    i = np.arange(1, d + 1)
    return 0.2 * (i - 1) / (d - 1) + 0.7 * (d - i) / (d - 1)


def alternative_model(d=4):
    """Stand-in for a VAR(1) with eigenvalues close to the unit circle.

    Reconstructed, not taken from published matrices.
    """
    return random_stable_var(d, loading_variances(d), ALTERNATIVE_RHO, seed=ALTERNATIVE_SEED + d)


BUILTIN_MODELS = {"paper-d2": PAPER_D2, "paper-d4": PAPER_D4, "paper-d6": PAPER_D6}


def get_model(name):
    """Built-in model by name: ``paper-d2/4/6`` or ``alternative-d<k>``."""
    if name in BUILTIN_MODELS:
        return BUILTIN_MODELS[name]
    if name.startswith("alternative"):
        tail = name[len("alternative") :].lstrip("-d")
        return alternative_model(int(tail) if tail else 4)
    raise KeyError(f"unknown VAR model {name!r}; choose from {sorted(BUILTIN_MODELS)} or alternative-d<k>")
