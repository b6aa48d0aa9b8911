"""Command-line experiment runner.

Subcommands: plan, bounds, gaussian-validate, sample, poc-scan, nn-train.
Exit codes: 0 success, 1 usage or configuration error, 2 numerical
failure (divergence, non-finite values, singular matrices), 3 violated
invariant.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
import time
import warnings
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from . import diagnostics, theory
from . import gaussian_oracle as go
from . import meanfield_nn as nn
from .config import load_config, manifest_json, parse_config, parse_list, parse_matrix, versions_string
from .estimators import train_network
from .exceptions import ConfigurationError, DivergenceError, DomainError, EvaluationError, ModelError
from .model import make_double_well, make_gaussian_pairwise
from .samplers import RNG_ALGORITHM, SAMPLERS, SamplerConfig, make_rng, sample_mean_field

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_INVARIANT = 0, 1, 2, 3

GAUSSIAN_COLUMNS = ("d", "N", "k", "lambda", "sigma2", "kl_dense", "kl_spectral", "abs_diff",
                    "w2_bures", "bound_w2", "kl_slope")
POC_COLUMNS = ("N", "k", "metric_value", "theory_bound", "ratio", "slope")
NN_COLUMNS = ("step", "F0", "objective", "grad_check")
PLAN_COLUMNS = ("block", "metric", "sampler", "M_formula", "N_formula", "M", "N", "kappa")

SPECTRAL_TOL = 1e-9
SLOPE_RANGE = (-2.3, -1.8)


class UsageError(Exception):
    pass


class InvariantError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _write_csv(path, header, rows):
    fh, close = _open_out(path)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    finally:
        if close:
            fh.close()


def _positive(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return v


def _nonneg(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v >= 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return v


def _pos_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return v


def _int_list(text):
    try:
        values = parse_list(text, int) if text.strip() else []
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("list must not be empty")
    return values


# -- plan / bounds ------------------------------------------------------------

def _params_from_file(path):
    cfg = load_config(path)
    merged = {}
    for section in cfg.sections():
        merged.update(cfg.section(section))
    try:
        return theory.RegularityParams.from_mapping(merged)
    except (TypeError, ValueError) as err:
        raise ConfigurationError(f"{path}: {err}") from None


def cmd_plan(args):
    params = _params_from_file(args.params_file) if args.params_file else None
    if params is None and args.kappa is None:
        raise UsageError("plan needs --params-file or --kappa")
    metric = None if args.metric == "all" else args.metric
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rows = theory.plan(metric, args.eps, args.d, k=args.k, assumptions=args.assumptions,
                           params=params, kappa=args.kappa)
    block = theory.resolve_block(args.assumptions)
    table = [(block, r.metric, r.sampler, r.M_formula, r.N_formula, r.M, r.N, r.kappa) for r in rows]
    widths = [max(len(h), *(len(_short(v)) for v in col)) for h, col in zip(PLAN_COLUMNS, zip(*table))]
    print("  ".join(h.ljust(w) for h, w in zip(PLAN_COLUMNS, widths)))
    for row in table:
        print("  ".join(_short(v).ljust(w) for v, w in zip(row, widths)))
    for note in rows[0].warnings:
        print(f"warning: {note}", file=sys.stderr)
    print("(oracle counts and particle counts are up to constants and polylog factors)")
    if args.csv:
        _write_csv(args.csv, PLAN_COLUMNS, table)
    return EXIT_OK


def _short(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def cmd_bounds(args):
    params = _params_from_file(args.params_file)
    N, k, d = args.N, args.k, args.d
    rows = []

    def add(name, fn):
        try:
            value = fn()
        except DomainError as err:
            rows.append((name, "", f"n/a: {err}"))
            return
        if isinstance(value, tuple):
            for field, v in zip(value._fields, value):
                rows.append((f"{name}.{field}", v, ""))
        else:
            rows.append((name, value, ""))

    add("lsi_bakry_emery", lambda: theory.lsi_bakry_emery(params))
    add("lsi_holley_stroock", lambda: theory.lsi_holley_stroock(params, N))
    add("weak_interaction_rho", lambda: theory.weak_interaction_rho(params))
    add("lsi_proximal_gibbs", lambda: theory.lsi_proximal_gibbs(params))
    add("lsi_stationary_uniform", lambda: theory.lsi_stationary_uniform(params, d))
    add("poc_sharp_n", lambda: theory.poc_sharp_n(k, d, args.eps, args.c_log))
    add("poc_weak", lambda: theory.poc_weak_bounds(params, N, k, d))
    add("poc_general", lambda: theory.poc_general_bound(params, N, k, d))
    for setting in theory.SETTINGS:
        add(f"kappa.{setting}", lambda s=setting: theory.condition_number(params, s))
    _write_csv(args.output, ("quantity", "value", "note"),
               [(q, float(v) if isinstance(v, (int, float)) and not isinstance(v, bool) else v, n)
                for q, v, n in rows])
    return EXIT_OK


# -- gaussian-validate -------------------------------------------------------

DEFAULT_GAUSSIAN_GRID = """
[grid]
d = 1, 2, 3
N = 2, 3, 4, 8, 16, 32, 64
lambda = 0, 0.1, 1
sigma2 = 0.5, 2
eig_low = 0.5
eig_high = 2.0
seed = 20240601
"""


def random_spd(d, low, high, rng):
    """SPD matrix with eigenvalues uniform in ``[low, high]`` and a random eigenbasis."""
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    Q = Q * np.sign(np.diag(R))
    eig = rng.uniform(low, high, size=d)
    A = (Q * eig) @ Q.T
    return 0.5 * (A + A.T)


def _grid_from_config(cfg):
    g = "grid"
    return dict(
        d=cfg.get(g, "d", [1, 2, 3], type=lambda s: parse_list(s, int)),
        N=cfg.get(g, "N", [2, 3, 4, 8, 16], type=lambda s: parse_list(s, int)),
        lam=cfg.get(g, "lambda", [0.0], type=parse_list),
        sigma2=cfg.get(g, "sigma2", [2.0], type=parse_list),
        low=cfg.get(g, "eig_low", 0.5, type=float),
        high=cfg.get(g, "eig_high", 2.0, type=float),
        seed=cfg.get(g, "seed", 0, type=int),
    )


def gaussian_validate_rows(grid, perturb=0.0):
    """Rows of :data:`GAUSSIAN_COLUMNS` plus the list of invariant failures."""
    rng = make_rng(grid["seed"])
    mats = {d: random_spd(d, grid["low"], grid["high"], rng) for d in grid["d"]}
    rows, failures = [], []
    for d in grid["d"]:
        A = mats[d]
        alpha = float(np.linalg.eigvalsh(A)[0])
        for lam in grid["lam"]:
            for s2 in grid["sigma2"]:
                params = theory.RegularityParams(sigma=math.sqrt(s2), alpha_V=alpha,
                                                 beta_V=float(np.linalg.eigvalsh(A)[-1]),
                                                 alpha_W=lam, beta_W=lam)
                group = defaultdict(list)
                block = []
                for N in grid["N"]:
                    spec = go.GaussianSpec(A, lam, math.sqrt(s2), N, 1)
                    full = go.stationary_cov_full(spec)
                    pi = go.mean_field_cov(spec)
                    for k in range(1, N + 1):
                        kd = k * d
                        p = go.GaussianDist.centered(full[:kd, :kd])
                        q = go.GaussianDist.centered(np.kron(np.eye(k), pi))
                        kl_dense = go.kl_gaussian(p, q)
                        kl_spec = go.kl_marginal_spectral(spec.with_(k=k)) + perturb
                        w2 = go.w2_gaussian(p, q)
                        try:
                            bound = theory.poc_weak_bounds(params, N, k, d).w2sq
                        except DomainError:
                            bound = None
                        diff = abs(kl_dense - kl_spec)
                        if not diff <= SPECTRAL_TOL:
                            failures.append(f"spectral/dense KL mismatch {diff:.3g} at d={d} N={N} k={k} "
                                            f"lambda={lam} sigma2={s2}")
                        if bound is not None and w2 ** 2 > bound + 1e-12:
                            failures.append(f"W2^2 = {w2 ** 2:.6g} exceeds bound {bound:.6g} at d={d} "
                                            f"N={N} k={k} lambda={lam} sigma2={s2}")
                        group[k].append((N, kl_spec))
                        block.append([d, N, k, lam, s2, kl_dense, kl_spec, diff, w2, bound, None])
                slopes = {}
                for k, pts in group.items():
                    pts = [(n, v) for n, v in pts if n >= 8 and v > 0]
                    if len(pts) >= 3:
                        slopes[k] = diagnostics.scaling_exponent(*zip(*pts)).slope
                if 1 in slopes and not SLOPE_RANGE[0] <= slopes[1] <= SLOPE_RANGE[1]:
                    failures.append(f"k=1 KL slope {slopes[1]:.3f} outside {SLOPE_RANGE} at d={d} "
                                    f"lambda={lam} sigma2={s2}")
                for row in block:
                    row[-1] = slopes.get(row[2])
                rows.extend(block)
    return rows, failures


def cmd_gaussian_validate(args):
    cfg = load_config(args.config) if args.config else parse_config(DEFAULT_GAUSSIAN_GRID, "<default grid>")
    grid = _grid_from_config(cfg)
    t0 = time.perf_counter()
    rows, failures = gaussian_validate_rows(grid, perturb=args.perturb_spectral)
    _write_csv(args.output, GAUSSIAN_COLUMNS, rows)
    print(f"gaussian-validate: {len(rows)} rows, {len(failures)} invariant failures, "
          f"{time.perf_counter() - t0:.2f} s", file=sys.stderr)
    for f in failures[:20]:
        print(f"  FAIL {f}", file=sys.stderr)
    if failures:
        raise InvariantError(f"{len(failures)} invariant failures")
    return EXIT_OK


# -- model / sampler from config --------------------------------------------

@dataclass
class RunSetup:
    model: object
    model_params: dict
    sampler: str
    inner: str
    config: SamplerConfig
    n_particles: int
    dim: int
    n_chains: int


def model_from_config(cfg):
    m = "model"
    family = cfg.get(m, "family", required=True)
    sigma2 = cfg.get(m, "sigma2", 2.0, type=float)
    if not sigma2 >= 0:
        raise ConfigurationError(f"{cfg.source}: [model] sigma2 must be >= 0")
    sigma = math.sqrt(sigma2)
    lam = cfg.get(m, "lambda", 0.0, type=float)
    try:
        if family == "gaussian":
            A = cfg.get(m, "A", required=True, type=parse_matrix)
            model = make_gaussian_pairwise(A, lam, sigma)
            params = {"family": family, "A": A.tolist(), "lambda": lam, "sigma2": sigma2}
            return model, params, A.shape[0]
        if family in ("double_well", "double-well"):
            shift = cfg.get(m, "shift", 0.0, type=float)
            dim = cfg.get(m, "dim", 1, type=int)
            model = make_double_well(lam, sigma, shift=shift, dim=dim)
            params = {"family": family, "lambda": lam, "sigma2": sigma2, "shift": shift, "dim": dim}
            return model, params, dim
        if family == "nn":
            path = cfg.get(m, "data", None)
            data = nn.load_dataset(path) if path else nn.toy_dataset()
            radius = cfg.get(m, "radius", None, type=float)
            model = nn.make_nn_model(data, lam, sigma, radius)
            params = {"family": family, "data": path or "toy", "lambda": lam, "sigma2": sigma2}
            return model, params, 1 + data.d_in
    except (ModelError, ValueError) as err:
        if isinstance(err, ConfigurationError):
            raise
        raise ConfigurationError(f"{cfg.source}: [model] {err}") from None
    cfg._fail(m, "family", f"unknown model family {family!r}")


def setup_from_config(cfg):
    model, params, dim = model_from_config(cfg)
    s = "sampler"
    name = cfg.get(s, "name", "lmc")
    if name not in SAMPLERS:
        cfg._fail(s, "name", f"unknown sampler {name!r}; expected one of {sorted(SAMPLERS)}")
    inner = cfg.get(s, "inner", "mala")
    opt_float = float
    config = SamplerConfig(
        step_size=cfg.get(s, "step_size", required=True, type=float),
        n_iters=cfg.get(s, "n_iters", required=True, type=int),
        burn_in=cfg.get(s, "burn_in", 0, type=int),
        thinning=cfg.get(s, "thinning", 1, type=int),
        friction=cfg.get(s, "friction", None, type=opt_float),
        prox_step=cfg.get(s, "prox_step", None, type=opt_float),
        inner_iters=cfg.get(s, "inner_iters", None, type=int),
        seed=cfg.get(s, "seed", 0, type=int),
        k_out=cfg.get(s, "k_out", None, type=int),
    )
    return RunSetup(model, params, name, inner, config,
                    n_particles=cfg.get(s, "n_particles", required=True, type=int),
                    dim=dim, n_chains=cfg.get(s, "n_chains", 1, type=int))


def cmd_sample(args):
    cfg = load_config(args.config)
    setup = setup_from_config(cfg)
    t0 = time.perf_counter()
    samples, chains = sample_mean_field(setup.model, setup.sampler, setup.config,
                                        (setup.n_particles, setup.dim), n_chains=setup.n_chains,
                                        inner=setup.inner, return_chains=True)
    wall = time.perf_counter() - t0
    n, k, d = samples.shape
    header = [f"particle{i}_dim{j}" for i in range(k) for j in range(d)]
    _write_csv(args.output, header, samples.reshape(n, k * d).tolist())
    rates = [c.acceptance_rate for c in chains]
    manifest = {
        "config_digest": cfg.digest(),
        "master_seed": setup.config.seed,
        "sampler": setup.sampler if setup.sampler != "proximal" else f"proximal-{setup.inner}",
        "model": {"name": setup.model.name, "params": setup.model_params},
        "versions": versions_string(),
        "rng_algorithm": RNG_ALGORITHM,
        "n_chains": setup.n_chains,
        "n_particles": setup.n_particles,
        "n_samples": n,
        "oracle_calls": sum(c.oracle_calls for c in chains),
        "n_gradient": sum(c.n_gradient for c in chains),
        "n_density": sum(c.n_density for c in chains),
        "acceptance_rate": None if rates[0] is None else float(np.mean(rates)),
        "wall_time": wall,
    }
    path = args.manifest or (f"{args.output}.manifest.json" if args.output and args.output != "-" else None)
    if path:
        with open(path, "w") as fh:
            fh.write(manifest_json(manifest))
    else:
        sys.stderr.write(manifest_json(manifest))
    return EXIT_OK


# -- poc-scan ------------------------------------------------------------------

def cmd_poc_scan(args):
    if args.config:
        cfg = load_config(args.config)
        A = cfg.get("model", "A", required=True, type=parse_matrix)
        lam = cfg.get("model", "lambda", 0.0, type=float)
        sigma2 = cfg.get("model", "sigma2", 2.0, type=float)
    else:
        A = np.eye(args.d) if args.A is None else parse_matrix(args.A)
        lam, sigma2 = args.lam, args.sigma2
    try:
        base = go.GaussianSpec(A, lam, math.sqrt(sigma2), max(2, args.k), args.k)
    except ValueError as err:
        raise UsageError(str(err)) from None
    eig = np.linalg.eigvalsh(base.A)
    params = theory.RegularityParams(sigma=base.sigma, alpha_V=float(eig[0]), beta_V=float(eig[-1]),
                                     alpha_W=lam, beta_W=lam)
    d, k = base.d, args.k
    if any(N < max(2, k) for N in args.N_list):
        raise UsageError(f"every N must be >= max(2, k = {k})")
    rows = []
    rng = make_rng(args.seed)
    for N in args.N_list:
        spec = base.with_(N=N)
        bounds = theory.poc_weak_bounds(params, N, k, d)
        if args.metric == "kl":
            value, bound = go.kl_marginal_spectral(spec), bounds.kl
        elif args.mode == "exact":
            value, bound = go.w2sq_marginal(spec), bounds.w2sq
        else:
            value, bound = _empirical_w2sq(spec, args, rng), bounds.w2sq
        rows.append([N, k, value, bound, value / bound if bound > 0 else None, None])
    pts = [(r[0], r[2]) for r in rows if r[2] > 0]
    slope = diagnostics.scaling_exponent(*zip(*pts)).slope if len(pts) >= 3 else None
    for r in rows:
        r[-1] = slope
    _write_csv(args.output, POC_COLUMNS, rows)
    if args.mode == "exact":
        bad = [r for r in rows if r[4] is not None and r[4] > 1.0 + 1e-12]
        if bad:
            raise InvariantError(f"{len(bad)} rows exceed the theoretical bound")
    return EXIT_OK


def _empirical_w2sq(spec, args, rng):
    """Assignment-based W2^2 between MALA draws of ``mu^{1:k}`` and exact ``pi^{(x)k}`` draws."""
    model = spec.pairwise_model()
    n = args.n_samples
    config = SamplerConfig(step_size=args.step_size, n_iters=args.burn_in + n * args.thinning,
                           burn_in=args.burn_in, thinning=args.thinning, seed=args.seed,
                           k_out=spec.k)
    draws = sample_mean_field(model, "mala", config, (spec.N, spec.d))
    pi = go.mean_field_cov(spec)
    ref = rng.multivariate_normal(np.zeros(spec.d), pi, size=(n, spec.k))
    return diagnostics.empirical_w2sq(draws.reshape(n, -1), ref.reshape(n, -1))


# -- nn-train --------------------------------------------------------------------

def cmd_nn_train(args):
    try:
        data = nn.load_dataset(args.data) if args.data else nn.toy_dataset()
    except OSError as err:
        raise UsageError(f"cannot read {args.data}: {err.strerror}") from None
    except ValueError as err:
        raise UsageError(str(err)) from None
    if args.sigma is not None and args.sigma2 is not None:
        raise UsageError("give at most one of --sigma and --sigma2")
    sigma = args.sigma if args.sigma is not None else math.sqrt(args.sigma2 if args.sigma2 is not None else 0.01)
    if args.log_every > args.steps:
        raise UsageError("--log-every must not exceed --steps")
    neurons, history, theta0 = train_network(
        data, args.neurons, sigma, args.lam, args.step_size, args.steps,
        sampler=args.sampler, seed=args.seed, log_every=args.log_every)
    check0 = nn.gradient_identity_error(theta0, data)
    check_end = nn.gradient_identity_error(neurons, data)
    rows = []
    for i, (step, f0, obj) in enumerate(history):
        gc = check0 if i == 0 else (check_end if i == len(history) - 1 else None)
        rows.append([int(step), f0, obj, gc])
    _write_csv(args.output, NN_COLUMNS, rows)
    print(f"nn-train: F0 {history[0, 1]:.6g} -> {history[-1, 1]:.6g} "
          f"({history[-1, 1] / history[0, 1]:.3f} of initial)", file=sys.stderr)
    return EXIT_OK


# -- entry point --------------------------------------------------------------------

def build_parser():
    p = _Parser(prog="mfsample", description="Sampling mean-field Gibbs measures with N particles.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    q = sub.add_parser("plan", help="oracle and particle counts per sampler")
    q.add_argument("--metric", choices=("w2", "sqrt_kl", "all"), default="all")
    q.add_argument("--eps", type=_positive, required=True)
    q.add_argument("--d", type=_pos_int, required=True)
    q.add_argument("--k", type=_pos_int, default=1)
    q.add_argument("--assumptions", default="sharp",
                   help=f"block name ({', '.join(theory.TABLE)}) or comma-separated assumptions")
    q.add_argument("--params-file")
    q.add_argument("--kappa", type=_positive)
    q.add_argument("--csv")
    q.set_defaults(func=cmd_plan)

    q = sub.add_parser("bounds", help="LSI constants and chaos bounds from declared constants")
    q.add_argument("--params-file", required=True)
    q.add_argument("--N", type=_pos_int, required=True)
    q.add_argument("--k", type=_pos_int, default=1)
    q.add_argument("--d", type=_pos_int, required=True)
    q.add_argument("--eps", type=_positive, default=0.1)
    q.add_argument("--c-log", type=_positive, default=1.0)
    q.add_argument("--output")
    q.set_defaults(func=cmd_bounds)

    q = sub.add_parser("gaussian-validate", help="closed-form checks on a grid of Gaussian models")
    q.add_argument("--config")
    q.add_argument("--output")
    q.add_argument("--perturb-spectral", type=float, nargs="?", const=1e-6, default=0.0,
                   help="add this offset to the spectral KL (self-test; default 1e-6)")
    q.set_defaults(func=cmd_gaussian_validate)

    q = sub.add_parser("sample", help="run a sampler from a config file")
    q.add_argument("--config", required=True)
    q.add_argument("--output")
    q.add_argument("--manifest")
    q.set_defaults(func=cmd_sample)

    q = sub.add_parser("poc-scan", help="chaos metric versus N on a Gaussian model")
    q.add_argument("--config")
    q.add_argument("--N-list", type=_int_list, required=True)
    q.add_argument("--k", type=_pos_int, default=1)
    q.add_argument("--d", type=_pos_int, default=1)
    q.add_argument("--A")
    q.add_argument("--lambda", dest="lam", type=_nonneg, default=1.0)
    q.add_argument("--sigma2", type=_positive, default=2.0)
    q.add_argument("--metric", choices=("w2sq", "kl"), default="w2sq")
    q.add_argument("--mode", choices=("exact", "empirical"), default="exact")
    q.add_argument("--n-samples", type=_pos_int, default=1000)
    q.add_argument("--step-size", type=_positive, default=0.1)
    q.add_argument("--burn-in", type=int, default=1000)
    q.add_argument("--thinning", type=_pos_int, default=10)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--output")
    q.set_defaults(func=cmd_poc_scan)

    q = sub.add_parser("nn-train", help="noisy gradient descent for a mean-field network")
    q.add_argument("--data")
    q.add_argument("--neurons", type=_pos_int, default=50)
    q.add_argument("--sigma", type=_nonneg)
    q.add_argument("--sigma2", type=_nonneg)
    q.add_argument("--lambda", dest="lam", type=_nonneg, default=0.01)
    q.add_argument("--sampler", choices=("lmc", "ulmc"), default="lmc")
    q.add_argument("--steps", type=_pos_int, default=2000)
    q.add_argument("--step-size", type=_positive, default=0.02)
    q.add_argument("--log-every", type=_pos_int, default=10)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--output")
    q.set_defaults(func=cmd_nn_train)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigurationError, DomainError) as err:
        print(f"mfsample {args.command}: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as err:
        print(f"mfsample {args.command}: numerical failure at iteration {err.iteration}: {err}",
              file=sys.stderr)
        return EXIT_NUMERICAL
    except (EvaluationError, FloatingPointError, np.linalg.LinAlgError) as err:
        print(f"mfsample {args.command}: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except InvariantError as err:
        print(f"mfsample {args.command}: invariant violated: {err}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as err:
        print(f"mfsample {args.command}: error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
