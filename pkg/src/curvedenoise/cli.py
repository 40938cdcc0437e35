"""Command-line interface.

Subcommands: ``simulate``, ``denoise``, ``dimension``, ``forecast`` and
``reproduce <experiment>``.  Settings come from built-in defaults, then an
optional JSON config file (``--config``), then command-line flags.
Exit status is 0 on success, 1 on usage errors and 2 on computation errors.
"""

import argparse
import datetime as dt
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .denoise import DenoiserConfig, run_denoising
from .dynspace import estimate_dynspace
from .exceptions import CurveDenoiseError
from .grid import CurveSeries, make_grid
from .pipeline import _sha256, load_csv, preprocess, save_results, write_curves, write_json
from .simulation import (
    DENOISE_METHODS,
    DgpConfig,
    ExperimentResult,
    default_thetas,
    forecast_errors,
    generate_dataset,
    perpendicular_thetas,
    run_denoising_experiment,
    run_forecast_experiment,
    shuffle_check,
    theoretical_bounds,
    zero_angle_thetas,
)

EXPERIMENTS = ("fig2", "fig3", "fig4", "fig5", "fig6", "table1", "appendixE", "shuffle")

DEFAULTS = {
    "model": None,
    "d": None,
    "lambda": 0.2,
    "n": None,
    "theta": "default",
    "q": 2,
    "c": [1.0, 1.0],
    "B": 100,
    "alpha": 0.05,
    "p": 1,
    "tau_eps": 0.01,
    "tau_par": 0.01,
    "tau_perp": 0.01,
    "runs": 50,
    "seed": 0,
    "jobs": None,
    "input": None,
    "layout": "wide",
    "bandwidth": None,
    "output_dir": "results",
    "pin_d": None,
    "oracle": False,
    "method": "mise-optimal",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _bool(text):
    t = str(text).lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _floats(text):
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_common(p):
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="JSON file with the same keys as the flags")
    p.add_argument("--model", default=S, help="paper-d2, paper-d4, paper-d6 or alternative-d<k>")
    p.add_argument("--d", type=int, default=S, help="dynamical-space dimension")
    p.add_argument("--lambda", dest="lambda", type=float, default=S, help="noise level")
    p.add_argument("--n", type=int, default=S, help="series length")
    p.add_argument("--theta", default=S,
                   help="noise angles: default, zero2, perpendicular or comma-separated radians")
    p.add_argument("--q", type=int, default=S)
    p.add_argument("--c", type=_floats, default=S, help="comma-separated lag weights")
    p.add_argument("--B", type=int, default=S, help="bootstrap replicates")
    p.add_argument("--alpha", type=float, default=S, help="bootstrap significance level")
    p.add_argument("--p", type=int, default=S, help="assumed VAR order of the loadings")
    p.add_argument("--tau-eps", dest="tau_eps", type=float, default=S)
    p.add_argument("--tau-par", dest="tau_par", type=float, default=S)
    p.add_argument("--tau-perp", dest="tau_perp", type=float, default=S)
    p.add_argument("--runs", type=int, default=S, help="Monte Carlo runs")
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--jobs", type=int, default=S, help="worker threads (default: all cores)")
    p.add_argument("--input", default=S, help="input CSV")
    p.add_argument("--layout", choices=("wide", "long"), default=S)
    p.add_argument("--bandwidth", type=float, default=S,
                   help="seasonal kernel bandwidth in days; enables preprocessing")
    p.add_argument("--output-dir", dest="output_dir", default=S)
    p.add_argument("--pin-d", dest="pin_d", type=_bool, nargs="?", const=True, default=S,
                   help="use --d (or the true d) instead of the bootstrap estimate")
    p.add_argument("--oracle", type=_bool, nargs="?", const=True, default=S,
                   help="also run the oracle variant in simulation sweeps")


def build_parser():
    parser = _Parser(prog="curvedenoise", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    p = sub.add_parser("simulate", help="write synthetic Y, X and noise curves")
    _add_common(p)
    p = sub.add_parser("denoise", help="estimate the noise structure of a CSV panel and denoise it")
    _add_common(p)
    p.add_argument("--method", choices=("mise-optimal", "orthogonal"), default=argparse.SUPPRESS)
    p = sub.add_parser("dimension", help="bootstrap estimate of the dynamical-space dimension")
    _add_common(p)
    p = sub.add_parser("forecast", help="compare the five forecasting strategies")
    _add_common(p)
    p = sub.add_parser("reproduce", help="run a named simulation experiment")
    p.add_argument("experiment", choices=EXPERIMENTS)
    _add_common(p)
    return parser


def resolve_config(args):
    """Merge defaults, the config file and explicit flags (in that order).

    Returns the resolved settings and the set of keys given explicitly.
    """
    cfg = dict(DEFAULTS)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "experiment", "config")}
    path = getattr(args, "config", None)
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"--config: cannot read {path}: {exc}") from None
        if isinstance(loaded, dict) and isinstance(loaded.get("config"), dict):
            loaded = loaded["config"]
        if not isinstance(loaded, dict):
            raise UsageError("--config: top level must be a JSON object")
        unknown = sorted(set(loaded) - set(DEFAULTS))
        if unknown:
            raise UsageError(f"--config: unknown key(s) {', '.join(unknown)}")
        cfg.update(loaded)
        explicit = set(loaded)
    else:
        explicit = set()
    cfg.update(flags)
    explicit |= set(flags)
    _validate(cfg)
    return cfg, explicit


def _validate(cfg):
    def bad(flag, why):
        raise UsageError(f"--{flag}: {why}")

    if cfg["lambda"] is not None and not 0 <= cfg["lambda"] <= 1:
        bad("lambda", "must lie in [0, 1]")
    for key in ("d", "n", "runs", "B", "q", "p"):
        v = cfg[key]
        if v is not None and (int(v) != v or v < (0 if key == "d" else 1)):
            bad(key, "must be a positive integer")
    if not 0 < cfg["alpha"] < 1:
        bad("alpha", "must lie in (0, 1)")
    if cfg["jobs"] is not None and cfg["jobs"] < 1:
        bad("jobs", "must be at least 1")
    if cfg["bandwidth"] is not None and not cfg["bandwidth"] > 0:
        bad("bandwidth", "must be positive")
    if len(cfg["c"]) != cfg["q"]:
        bad("c", f"needs {cfg['q']} values for q={cfg['q']}")
    for key in ("tau_eps", "tau_par", "tau_perp"):
        if not 0 <= cfg[key] <= 1:
            bad(key.replace("_", "-"), "must lie in [0, 1]")
    if cfg["method"] not in ("mise-optimal", "orthogonal"):
        bad("method", "must be mise-optimal or orthogonal")


def _thetas(spec, d, d_eps=8):
    if isinstance(spec, (list, tuple)):
        th = [float(x) for x in spec]
    elif spec in (None, "default"):
        return default_thetas(d, d_eps)
    elif spec == "zero2":
        return zero_angle_thetas(d, d_eps)
    elif spec in ("perp", "perpendicular"):
        return perpendicular_thetas(d, d_eps)
    else:
        try:
            th = _floats(spec)
        except argparse.ArgumentTypeError as exc:
            raise UsageError(f"--theta: {exc}") from None
    if len(th) != d_eps:
        raise UsageError(f"--theta: need {d_eps} angles, got {len(th)}")
    return tuple(th)


def _model_d(cfg, default_d):
    d = cfg["d"]
    model = cfg["model"]
    if d is None and model and model.startswith("paper-d"):
        d = int(model[len("paper-d"):])
    if d is None and model and model.startswith("alternative"):
        tail = model[len("alternative"):].lstrip("-d")
        d = int(tail) if tail else 4
    return d or default_d


def dgp_from(cfg, d=None, lam=None, n=None, thetas=None, seed=None):
    d = d or _model_d(cfg, 2)
    return DgpConfig(
        d=d,
        lam=cfg["lambda"] if lam is None else lam,
        n=n or cfg["n"] or 800,
        thetas=thetas if thetas is not None else _thetas(cfg["theta"], d),
        model=cfg["model"],
        seed=cfg["seed"] if seed is None else seed,
    )


def estimation_from(cfg, d=None):
    return DenoiserConfig(
        q=cfg["q"],
        c=tuple(cfg["c"]),
        B=cfg["B"],
        alpha=cfg["alpha"],
        p=cfg["p"],
        tau_eps=cfg["tau_eps"],
        tau_par=cfg["tau_par"],
        tau_perp=cfg["tau_perp"],
        d=d,
        seed=cfg["seed"],
        jobs=_jobs(cfg),
    )


def _jobs(cfg):
    return cfg["jobs"] or os.cpu_count() or 1


def _dates(n, start=dt.date(2000, 1, 1)):
    return [(start + dt.timedelta(days=t)).isoformat() for t in range(n)]


def _load_series(cfg):
    panel = load_csv(cfg["input"], cfg["layout"])
    if cfg["bandwidth"] is not None:
        Y, report = preprocess(panel, cfg["bandwidth"])
        return Y, list(panel.dates), {"scale": report.scale}
    grid = make_grid(0.0, 1.0, panel.matrix.shape[1])
    return CurveSeries(panel.matrix, grid), list(panel.dates), {}


def _finish(out, cfg, command, files):
    manifest_path = os.path.join(out, "manifest.json")
    manifest = {}
    if os.path.exists(manifest_path):
        with open(manifest_path, encoding="utf-8") as fh:
            manifest = json.load(fh)
    manifest.update({"command": command, "config": cfg, "version": __version__})
    for f in files:
        manifest.setdefault("files", {})[f] = _sha256(os.path.join(out, f))
    write_json(manifest, manifest_path)
    return 0


def cmd_simulate(cfg):
    dgp = dgp_from(cfg)
    Y, X, eps, _ = generate_dataset(dgp, with_truth=False)
    out = cfg["output_dir"]
    os.makedirs(out, exist_ok=True)
    dates = _dates(dgp.n)
    names = []
    for name, series in (("Y.csv", Y), ("X.csv", X), ("eps.csv", eps)):
        write_curves(series, os.path.join(out, name), dates)
        names.append(name)
    write_json({"dgp": dgp.summary(), "bounds": theoretical_bounds(dgp)}, os.path.join(out, "summary.json"))
    return _finish(out, cfg, "simulate", names + ["summary.json"])


def _require_input(cfg):
    if not cfg["input"]:
        raise UsageError("--input: required for this command")


def cmd_denoise(cfg):
    _require_input(cfg)
    Y, dates, extra = _load_series(cfg)
    pinned = cfg["pin_d"] or (cfg["pin_d"] is None and cfg["d"] is not None)
    if pinned and cfg["d"] is None:
        raise UsageError("--pin-d: needs --d")
    est = estimation_from(cfg, d=cfg["d"] if pinned else None)
    method = cfg["method"].replace("-", "_")
    result = run_denoising(Y, method, est)
    save_results(result, cfg["output_dir"], extra=extra, dates=dates)
    return _finish(cfg["output_dir"], cfg, "denoise", [])


def cmd_dimension(cfg):
    if cfg["input"]:
        Y, _, _ = _load_series(cfg)
    else:
        Y = generate_dataset(dgp_from(cfg), with_truth=False)[0]
    est = estimate_dynspace(Y, cfg["q"], cfg["c"], cfg["B"], cfg["alpha"], None, cfg["seed"], _jobs(cfg))
    out = cfg["output_dir"]
    os.makedirs(out, exist_ok=True)
    write_json(
        {
            "d_hat": est.d_hat,
            "eigenvalues": est.eigenvalues[: min(30, est.eigenvalues.size)],
            "test_trace": [list(t) for t in est.test_trace],
        },
        os.path.join(out, "summary.json"),
    )
    return _finish(out, cfg, "dimension", ["summary.json"])


def cmd_forecast(cfg):
    out = cfg["output_dir"]
    if cfg["input"]:
        Y, _, _ = _load_series(cfg)
        if cfg["d"] is None:
            raise UsageError("--d: required when forecasting a CSV panel")
        errs = forecast_errors(Y, Y, cfg["d"], p=cfg["p"], config=estimation_from(cfg))
        result = ExperimentResult(name="forecast")
        for method, v in errs.items():
            result.add({"input": os.path.basename(cfg["input"])}, 0, cfg["seed"], method, "delta_f", v)
    else:
        dgp = dgp_from(cfg, d=_model_d(cfg, 4))
        result = run_forecast_experiment(dgp, cfg["runs"], cfg["seed"], estimation_from(cfg), _jobs(cfg))
    save_results(result, out)
    return _finish(out, cfg, "forecast", [])


FIG_N = (200, 400, 800, 1600, 3200)
FIG3_LAMBDAS = (0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5)
TABLE1_LAMBDAS = (0.05, 0.2, 0.4)


def _sweep_n(cfg, ds, thetas_fn):
    ns = (cfg["n"],) if cfg["n"] else FIG_N
    return [dgp_from(cfg, d=d, n=n, thetas=thetas_fn(d)) for d in ds for n in ns]


def cmd_reproduce(cfg, experiment, explicit=()):
    runs, seed, jobs = cfg["runs"], cfg["seed"], _jobs(cfg)
    pin = True if cfg["pin_d"] is None else cfg["pin_d"]
    est = estimation_from(cfg)
    ds = (cfg["d"],) if cfg["d"] else (2, 4, 6)
    with_oracle = DENOISE_METHODS
    without_oracle = DENOISE_METHODS if cfg["oracle"] else ("mise_optimal", "orthogonal")
    default = lambda d: _thetas(cfg["theta"], d)  # noqa: E731

    if experiment in ("fig2", "fig4"):
        sweep = _sweep_n(cfg, ds, default)
        methods = with_oracle if experiment == "fig2" else ("mise_optimal",)
        result = run_denoising_experiment(sweep, methods, runs, seed, est, pin, jobs)
    elif experiment == "fig3":
        d = cfg["d"] or 4
        lams = (cfg["lambda"],) if "lambda" in explicit else FIG3_LAMBDAS
        sweep = [dgp_from(cfg, d=d, n=cfg["n"] or 800, lam=lam) for lam in lams]
        result = run_denoising_experiment(sweep, with_oracle, runs, seed, est, pin, jobs)
    elif experiment == "fig5":
        sweep = _sweep_n(cfg, ds, lambda d: zero_angle_thetas(d, 8))
        result = run_denoising_experiment(sweep, with_oracle, runs, seed, est, pin, jobs)
    elif experiment == "fig6":
        sweep = _sweep_n(cfg, ds, lambda d: perpendicular_thetas(d, 8))
        result = run_denoising_experiment(sweep, without_oracle, runs, seed, est, pin, jobs)
    elif experiment == "appendixE":
        sweep = _sweep_n(cfg, (cfg["d"] or 2,), default)
        result = ExperimentResult(name="appendixE")
        for p in (1, 2, 3):
            part = run_denoising_experiment(
                sweep, ("mise_optimal",), runs, seed, replace(est, p=p), pin, jobs
            )
            for r in part.rows:
                r["p"] = p
            result.extend(part)
    elif experiment == "table1":
        d = cfg["d"] or 4
        lams = (cfg["lambda"],) if "lambda" in explicit else TABLE1_LAMBDAS
        result = ExperimentResult(name="table1")
        for i, lam in enumerate(lams):
            dgp = dgp_from(cfg, d=d, n=cfg["n"] or 800, lam=lam)
            result.extend(run_forecast_experiment(dgp, runs, seed, est, jobs, key=i))
        result.meta["bound"] = theoretical_bounds(dgp_from(cfg, d=d))[2]
    else:  # shuffle
        d = cfg["d"] or 4
        dgp = dgp_from(cfg, d=d, n=cfg["n"] or 400)
        result = ExperimentResult(name="shuffle")
        rng = np.random.default_rng(seed)
        sh_est = replace(est, d=d) if cfg["pin_d"] else est
        for r in range(cfg["runs"] if "runs" in explicit else 5):
            perm = rng.permutation(dgp.grid.N)
            dev = shuffle_check(dgp, seed=seed, permutation=perm, estimation=sh_est)
            result.add({"d": d, "n": dgp.n}, r, seed, "mise_optimal", "max_abs_deviation", dev)
    result.name = experiment
    out = cfg["output_dir"]
    save_results(result, out)
    return _finish(out, cfg, f"reproduce {experiment}", [])


COMMANDS = {
    "simulate": cmd_simulate,
    "denoise": cmd_denoise,
    "dimension": cmd_dimension,
    "forecast": cmd_forecast,
}


def run(argv=None):
    """Entry point; returns the process exit status."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        cfg, explicit = resolve_config(args)
    except UsageError as exc:
        print(f"curvedenoise: usage error: {exc}", file=sys.stderr)
        return 1
    try:
        if args.command == "reproduce":
            status = cmd_reproduce(cfg, args.experiment, explicit)
        else:
            status = COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"curvedenoise: usage error: {exc}", file=sys.stderr)
        return 1
    except (CurveDenoiseError, np.linalg.LinAlgError, OSError, KeyError) as exc:
        print(f"curvedenoise: error: {exc}", file=sys.stderr)
        return 2
    return status


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
