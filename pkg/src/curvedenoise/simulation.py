"""Simulated curve time series, closed-form bounds and Monte Carlo experiments.

Signal curves are ``X_t = g_X sum_j xi_tj phi_j`` with
``phi_j(u) = cos(2 pi j u) + sin(2 pi j u)`` and VAR(1) loadings.  Noise
curves are ``eps_t = g_eps sum_j Z_tj a^{-(j-1)} phi_eps_j`` with
``phi_eps_j = (cos t_j + sin t_j) cos(2 pi j u) + (cos t_j - sin t_j) sin(2 pi j u)``,
so that ``<phi_j, phi_eps_j> = cos t_j``.  The prefactors make the
integrated variance of ``Y`` one and that of the noise ``lambda``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .covariance import Kernel, kernel_from_basis
from .denoise import (
    DenoiserConfig,
    FittedDenoiser,
    denoise_mise_optimal,
    denoise_orthogonal,
    fit_denoiser,
    mean_integrated_sq,
    mise_minimum,
    noise_level,
    omega_matrices,
)
from .dynspace import DynSpaceEstimate
from .exceptions import CurveDenoiseError, InvalidConfigError
from .grid import CurveSeries, Grid, make_grid
from .noisemodel import (
    estimate_noise_model,
    loading_autocov,
    noise_covariance,
    population_split,
    positive_part,
    proxy_loadings,
    reconstruct_sigma0,
    split_subspaces,
)
from .var import VarModel, fit_var, forecast_series, get_model, simulate_var

DEFAULT_N_GRID = 200
POPULATION_RTOL = 1e-9


@dataclass(frozen=True)
class DgpConfig:
    """Parameters of the simulated curve time series.

    ``thetas`` defaults to ``pi/4`` for ``j <= min(d, d_eps)`` and 0 beyond.
    ``model`` is a built-in model name or a :class:`VarModel`; ``None``
    selects ``paper-d<d>``.
    """

    d: int = 2
    lam: float = 0.2
    n: int = 800
    d_eps: int = 8
    a: float = 1.5
    thetas: tuple = None
    model: object = None
    grid: Grid = None
    seed: int = 0
    burn_in: int = 500

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise InvalidConfigError(f"d must be a positive integer, got {self.d}")
        if int(self.d_eps) != self.d_eps or self.d_eps < 1:
            raise InvalidConfigError(f"d_eps must be a positive integer, got {self.d_eps}")
        if not 0.0 <= self.lam <= 1.0:
            raise InvalidConfigError(f"lambda must lie in [0, 1], got {self.lam}")
        if not self.a > 0:
            raise InvalidConfigError(f"a must be positive, got {self.a}")
        if int(self.n) != self.n or self.n < 4:
            raise InvalidConfigError(f"n must be an integer >= 4, got {self.n}")
        grid = self.grid or make_grid(0.0, 1.0, DEFAULT_N_GRID)
        if grid.N <= 2 * max(self.d, self.d_eps):
            raise InvalidConfigError("grid too coarse for the trigonometric basis")
        object.__setattr__(self, "grid", grid)
        if self.thetas is None:
            th = default_thetas(self.d, self.d_eps)
        else:
            th = tuple(float(t) for t in self.thetas)
            if len(th) != self.d_eps:
                raise InvalidConfigError(f"need {self.d_eps} angles, got {len(th)}")
        object.__setattr__(self, "thetas", th)
        model = self.var_model()
        if model.d != self.d:
            raise InvalidConfigError(f"VAR model has dimension {model.d}, config has d={self.d}")

    def var_model(self):
        if isinstance(self.model, VarModel):
            return self.model
        name = self.model or f"paper-d{self.d}"
        try:
            return get_model(name)
        except KeyError as exc:
            raise InvalidConfigError(str(exc)) from None

    def summary(self):
        """Flat, JSON-friendly description."""
        model = self.model if isinstance(self.model, (str, type(None))) else "custom"
        return {
            "d": self.d,
            "lambda": self.lam,
            "n": self.n,
            "d_eps": self.d_eps,
            "a": self.a,
            "thetas": list(self.thetas),
            "model": model or f"paper-d{self.d}",
            "grid": [self.grid.a, self.grid.b, self.grid.N],
            "seed": self.seed,
        }


def default_thetas(d, d_eps):
    m = min(d, d_eps)
    return tuple(np.pi / 4 if j < m else 0.0 for j in range(d_eps))


def zero_angle_thetas(d, d_eps, zero=(2,)):
    """Default angles with ``theta_j = 0`` for every ``j`` in ``zero``."""
    th = list(default_thetas(d, d_eps))
    for j in zero:
        th[j - 1] = 0.0
    return tuple(th)


def perpendicular_thetas(d, d_eps):
    m = min(d, d_eps)
    return tuple(np.pi / 2 if j < m else 0.0 for j in range(d_eps))


def signal_basis(grid, d):
    u = grid.points
    j = np.arange(1, d + 1)[:, None]
    return CurveSeries(np.cos(2 * np.pi * j * u) + np.sin(2 * np.pi * j * u), grid)


def noise_basis(grid, thetas):
    u = grid.points
    th = np.asarray(thetas, dtype=float)[:, None]
    j = np.arange(1, th.shape[0] + 1)[:, None]
    c, s = np.cos(2 * np.pi * j * u), np.sin(2 * np.pi * j * u)
    return CurveSeries((np.cos(th) + np.sin(th)) * c + (np.cos(th) - np.sin(th)) * s, grid)


def noise_scale_sum(a, d_eps):
    """``sum_{j=1}^{d_eps} a^{-2(j-1)}``."""
    return float(np.sum(float(a) ** (-2.0 * np.arange(d_eps))))


def g_eps(lam, a, d_eps):
    return float(np.sqrt(lam / noise_scale_sum(a, d_eps)))


def g_x(lam, model):
    return float(np.sqrt((1.0 - lam) / np.trace(model.stationary_cov())))


@dataclass
class Truth:
    """Population quantities of a configuration."""

    psi: CurveSeries
    noise_basis: CurveSeries
    noise_eigenvalues: np.ndarray
    sigma_eps: Kernel
    par_basis: CurveSeries
    perp_basis: CurveSeries
    omegas: object
    g_x: float
    g_eps: float


def population_truth(cfg, rtol=POPULATION_RTOL):
    """Exact subspaces and noise covariance; ``rtol`` drops negligible modes."""
    grid = cfg.grid
    psi = signal_basis(grid, cfg.d)
    E = noise_basis(grid, cfg.thetas)
    ge = g_eps(cfg.lam, cfg.a, cfg.d_eps)
    evals = ge**2 * float(cfg.a) ** (-2.0 * np.arange(cfg.d_eps))
    sigma = kernel_from_basis(E.data, np.diag(evals), grid)
    if cfg.lam > 0:
        par, _, _, perp, _, _ = population_split(sigma, psi, rtol)
        omegas = omega_matrices(sigma, par, perp)
    else:
        par = perp = CurveSeries(np.empty((0, grid.N)), grid, allow_empty=True)
        omegas = omega_matrices(sigma, par, perp)
    return Truth(psi, E, evals, sigma, par, perp, omegas, g_x(cfg.lam, cfg.var_model()), ge)


def generate_dataset(cfg, with_truth=True):
    """Simulate ``(Y, X, eps, truth)``; ``truth`` is ``None`` unless requested."""
    model = cfg.var_model()
    ss = np.random.SeedSequence(int(cfg.seed))
    s_var, s_noise = ss.spawn(2)
    xi = simulate_var(model, cfg.n, cfg.burn_in, np.random.default_rng(s_var))
    Z = np.random.default_rng(s_noise).standard_normal((cfg.n, cfg.d_eps))
    grid = cfg.grid
    gx = g_x(cfg.lam, model)
    ge = g_eps(cfg.lam, cfg.a, cfg.d_eps)
    X = gx * xi @ signal_basis(grid, cfg.d).data
    scale = float(cfg.a) ** (-np.arange(cfg.d_eps))
    eps = ge * (Z * scale) @ noise_basis(grid, cfg.thetas).data
    truth = population_truth(cfg) if with_truth else None
    return CurveSeries(X + eps, grid), CurveSeries(X, grid), CurveSeries(eps, grid), truth


def theoretical_bounds(cfg):
    """Closed-form ``(opt_min, ortho_min, forecast_bound)``.

    ``opt_min`` sums the noise variances of modes with ``theta_j = 0`` and
    ``j <= min(d, d_eps)``; ``ortho_min`` sums ``cos^2 theta_j`` times the
    noise variance over ``j <= min(d, d_eps)``; the forecast bound is
    ``Tr[Omega] / Tr[Sigma_0]``.
    """
    m = min(cfg.d, cfg.d_eps)
    g2 = g_eps(cfg.lam, cfg.a, cfg.d_eps) ** 2
    var = float(cfg.a) ** (-2.0 * np.arange(m))
    th = np.asarray(cfg.thetas[:m])
    cos2 = np.cos(th) ** 2
    opt = g2 * float(np.sum(var[np.isclose(th, 0.0, atol=1e-12)]))
    ortho = g2 * float(np.sum(cos2 * var))
    model = cfg.var_model()
    bound = float(np.trace(model.innovation_cov) / np.trace(model.stationary_cov()))
    return opt, ortho, bound


@dataclass
class ExperimentResult:
    """Long-format results: one row per (configuration, run, method, metric)."""

    rows: list = field(default_factory=list)
    name: str = "experiment"
    meta: dict = field(default_factory=dict)

    def add(self, config, run, seed, method, metric, value, error=""):
        self.rows.append(
            {
                **config,
                "run": int(run),
                "seed": int(seed),
                "method": method,
                "metric": metric,
                "value": float(value),
                "error": error,
            }
        )

    def extend(self, other):
        self.rows.extend(other.rows)
        return self

    def values(self, method, metric, **where):
        out = []
        for r in self.rows:
            if r["method"] != method or r["metric"] != metric or r["error"]:
                continue
            if all(_matches(r.get(k), v) for k, v in where.items()):
                out.append(r["value"])
        return np.asarray(out, dtype=float)

    def errors(self):
        return [r for r in self.rows if r["error"]]

    def aggregate(self, by=("method", "metric")):
        """Median, quartiles, mean and standard error per group."""
        groups = {}
        for r in self.rows:
            if r["error"]:
                continue
            key = tuple(_hashable(r.get(k)) for k in by)
            groups.setdefault(key, []).append(r["value"])
        out = []
        for key in sorted(groups, key=lambda k: tuple(str(x) for x in k)):
            v = np.asarray(groups[key], dtype=float)
            v = v[np.isfinite(v)]
            rec = dict(zip(by, key))
            rec.update(_stats(v))
            out.append(rec)
        return out


def _hashable(v):
    return tuple(v) if isinstance(v, list) else v


def _matches(a, b):
    if isinstance(a, float) or isinstance(b, float):
        return a is not None and b is not None and np.isclose(a, b)
    return _hashable(a) == _hashable(b)


def _stats(v):
    if v.size == 0:
        nan = float("nan")
        return {"count": 0, "median": nan, "q1": nan, "q3": nan, "mean": nan, "se": nan}
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    se = float(np.std(v, ddof=1) / np.sqrt(v.size)) if v.size > 1 else float("nan")
    return {
        "count": int(v.size),
        "median": float(med),
        "q1": float(q1),
        "q3": float(q3),
        "mean": float(np.mean(v)),
        "se": se,
    }


def run_seed(base_seed, key, run):
    """Seed for one run, derived from the base seed, a config key and the run index."""
    return int(np.random.SeedSequence([int(base_seed), int(key), int(run)]).generate_state(1)[0])


def _map(fn, items, jobs):
    if jobs is not None and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def fit_oracle(Y, truth, config):
    """Denoiser with the true subspaces and a noise covariance estimated on them.

    The true ``psi`` replaces the estimated dynamical space; the noise,
    parallel and perpendicular spaces are those the thresholds select on the
    population noise covariance.  Only the regression matrices are estimated.
    """
    cfg = config or DenoiserConfig()
    psi = truth.psi
    L = proxy_loadings(Y, psi)
    S0 = reconstruct_sigma0([loading_autocov(L, k) for k in range(1, 2 * cfg.p + 1)], cfg.p)
    sigma_hat = noise_covariance(Y, psi, S0)
    sigma_hat_plus = positive_part(sigma_hat, cfg.tau_eps)[0]
    pop_plus, pop_basis, pop_vals, _ = positive_part(truth.sigma_eps, cfg.tau_eps)
    par, _, _, perp, _, _ = split_subspaces(
        pop_plus, pop_basis, pop_vals, psi, cfg.tau_par, cfg.tau_perp
    )
    omegas = omega_matrices(sigma_hat_plus, par, perp)
    noise = estimate_noise_model(Y, psi, cfg.p, cfg.tau_eps, cfg.tau_par, cfg.tau_perp)
    noise.par_basis, noise.perp_basis = par, perp
    noise.d_par, noise.d_perp = par.n, perp.n
    noise.sigma_eps_plus = sigma_hat_plus
    dyn = DynSpaceEstimate(psi.n, psi, np.empty(0), [])
    return FittedDenoiser(psi, dyn, noise, omegas)


DENOISE_METHODS = ("mise_optimal", "orthogonal", "oracle")


def _denoise_run(cfg, methods, est, pin_d):
    Y, X, _, truth = generate_dataset(cfg)
    est = replace(est, d=cfg.d if pin_d else est.d, seed=cfg.seed)
    opt_true, ortho_true, _ = theoretical_bounds(cfg)
    out = []
    fitted = None
    if {"mise_optimal", "orthogonal"} & set(methods):
        fitted = fit_denoiser(Y, est)
        out.append(("estimate", "d_hat", fitted.dynspace.d_hat))
        out.append(("estimate", "d_eps", fitted.noise.d_eps))
        out.append(("estimate", "d_par", fitted.noise.d_par))
        out.append(("estimate", "d_perp", fitted.noise.d_perp))
    for method in methods:
        if method == "oracle":
            fit = fit_oracle(Y, truth, est)
            Xh = denoise_mise_optimal(Y, fit.psi, fit.omegas, fit.noise.par_basis, fit.noise.perp_basis)
            floor, known = mise_minimum(fit.omegas)[0], opt_true
        elif method == "orthogonal":
            fit = fitted
            Xh = denoise_orthogonal(Y, fit.psi)
            floor, known = mise_minimum(fit.omegas)[1], ortho_true
        elif method == "mise_optimal":
            fit = fitted
            Xh = fit.denoise(Y, "mise_optimal")
            floor, known = mise_minimum(fit.omegas)[0], opt_true
        else:
            raise ValueError(f"unknown method {method!r}")
        mise = mean_integrated_sq(X.data, Xh.data, cfg.grid)
        # lambda_hat uses the known population floor, lambda_plugin the estimated one
        lam_hat, lam_trace = noise_level(Y, Xh, known, fit.noise.sigma_eps_plus)
        lam_plugin = noise_level(Y, Xh, floor)[0]
        out.append((method, "mise", mise))
        out.append((method, "mise_over_lambda", mise / cfg.lam if cfg.lam > 0 else np.nan))
        out.append((method, "mise_min_estimate", floor))
        out.append((method, "lambda_hat", lam_hat))
        out.append((method, "lambda_plugin", lam_plugin))
        out.append((method, "lambda_trace", lam_trace))
    return out


def run_denoising_experiment(
    sweep, methods=DENOISE_METHODS, runs=50, base_seed=0, estimation=None, pin_d=True, jobs=None
):
    """Monte Carlo denoising sweep.

    Each configuration in ``sweep`` is simulated ``runs`` times with seeds
    derived from ``base_seed``, the configuration index and the run index.
    Failing runs are recorded as rows carrying the error message.
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    est = estimation or DenoiserConfig()
    methods = tuple(methods)
    tasks = [(i, r) for i in range(len(sweep)) for r in range(runs)]

    def one(task):
        i, r = task
        seed = run_seed(base_seed, i, r)
        cfg = replace(sweep[i], seed=seed)
        try:
            return task, seed, _denoise_run(cfg, methods, est, pin_d), ""
        except (CurveDenoiseError, np.linalg.LinAlgError) as exc:
            return task, seed, [], f"{type(exc).__name__}: {exc}"

    result = ExperimentResult(name="denoising")
    for (i, r), seed, values, err in _map(one, tasks, jobs):
        summary = _row_config(sweep[i])
        if err:
            for m in methods:
                result.add(summary, r, seed, m, "mise", np.nan, err)
            continue
        for method, metric, value in values:
            result.add(summary, r, seed, method, metric, value)
    return result


def _row_config(cfg):
    s = cfg.summary()
    return {
        "d": s["d"],
        "lambda": s["lambda"],
        "n": s["n"],
        "model": s["model"],
        "thetas": ";".join(f"{t:.6g}" for t in s["thetas"]),
    }


FORECAST_METHODS = ("mean", "naive", "karhunen_loeve", "mise_optimal", "orthogonal")


def _kl_forecast(Z, d, grid, p=1):
    """VAR(p) forecasts of the leading ``d`` principal-component scores of ``Z``."""
    mean = Z.mean(axis=0)
    C = Z - mean
    w = grid.weight
    cov = C.T @ C / (C.shape[0] - 1)
    vals, vecs = np.linalg.eigh(w * cov)
    basis = vecs[:, np.argsort(-vals)[:d]].T / np.sqrt(w)
    scores = w * C @ basis.T
    model = fit_var(scores, p)
    return mean + forecast_series(model, scores) @ basis


def forecast_errors(Y, X, d, fitted=None, p=1, config=None):
    """Normalized in-sample one-step forecast error for every strategy.

    Errors compare forecasts of ``X_t`` for ``t = p+1..n`` and are divided
    by the mean integrated square of ``X`` over the same times.
    """
    grid = Y.grid
    target = X.data[p:]
    denom = grid.weight * np.sum(target * target) / target.shape[0] / grid.width
    fit = fitted or fit_denoiser(Y, replace(config or DenoiserConfig(), d=d))
    forecasts = {
        "mean": np.broadcast_to(Y.data.mean(axis=0), target.shape),
        "naive": Y.data[p - 1 : -1],
        "karhunen_loeve": _kl_forecast(Y.data, d, grid, p),
        "mise_optimal": _kl_forecast(fit.denoise(Y, "mise_optimal").data, d, grid, p),
        "orthogonal": _kl_forecast(fit.denoise(Y, "orthogonal").data, d, grid, p),
    }
    return {k: mean_integrated_sq(target, f, grid) / denom for k, f in forecasts.items()}


def run_forecast_experiment(cfg, runs=100, base_seed=0, estimation=None, jobs=None, key=0):
    """Monte Carlo comparison of the five forecasting strategies plus the bound."""
    if runs < 1:
        raise ValueError("runs must be at least 1")
    est = estimation or DenoiserConfig()
    bound = theoretical_bounds(cfg)[2]

    def one(r):
        seed = run_seed(base_seed, key, r)
        c = replace(cfg, seed=seed)
        try:
            Y, X, _, _ = generate_dataset(c, with_truth=False)
            return r, seed, forecast_errors(Y, X, c.d, config=replace(est, seed=seed)), ""
        except (CurveDenoiseError, np.linalg.LinAlgError) as exc:
            return r, seed, {}, f"{type(exc).__name__}: {exc}"

    result = ExperimentResult(name="forecast", meta={"bound": bound})
    summary = _row_config(cfg)
    for r, seed, errs, err in _map(one, range(runs), jobs):
        if err:
            result.add(summary, r, seed, "mise_optimal", "delta_f", np.nan, err)
            continue
        for method in FORECAST_METHODS:
            result.add(summary, r, seed, method, "delta_f", errs[method])
        result.add(summary, r, seed, "bound", "delta_f", bound)
    return result


def shuffle_check(cfg, seed=0, permutation=None, estimation=None):
    """Max deviation between denoising ``Y`` and un-permuting the denoised ``sigma Y``.

    The full pipeline (including the bootstrap dimension test unless ``d``
    is pinned in ``estimation``) runs on both series with the same seed.
    """
    Y, _, _, _ = generate_dataset(cfg, with_truth=False)
    N = cfg.grid.N
    if permutation is None:
        permutation = np.random.default_rng(seed).permutation(N)
    perm = np.asarray(permutation)
    if sorted(perm.tolist()) != list(range(N)):
        raise ValueError("permutation must be a rearrangement of 0..N-1")
    est = replace(estimation or DenoiserConfig(), seed=seed)
    Yp = CurveSeries(Y.data[:, perm], Y.grid)
    a = fit_denoiser(Y, est).denoise(Y, "mise_optimal").data
    b = fit_denoiser(Yp, est).denoise(Yp, "mise_optimal").data
    inv = np.argsort(perm)
    return float(np.max(np.abs(a - b[:, inv])))


def config_to_dict(cfg):
    d = asdict(cfg)
    d["grid"] = [cfg.grid.a, cfg.grid.b, cfg.grid.N]
    if not isinstance(cfg.model, (str, type(None))):
        d["model"] = "custom"
    return d
