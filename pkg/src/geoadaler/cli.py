"""Command-line entry point wiring configs to experiments.

Each subcommand resolves its configuration (flags override file values,
the GEOADALER_DATA_DIR environment variable supplies the default dataset
path), writes result CSVs plus a manifest sufficient to reproduce the run
bit-exactly, and exits 0 on success, 2 on configuration errors, 3 on
runtime contract violations.
"""

import argparse
import os
import sys
import time

import numpy as np

from . import __version__
from .data import (KINDS, RunConfig, load_split, parse_config, validate_config,
                   write_csv, write_manifest)
from .errors import ConfigError, ContractError
from .fixedpoint import (OperatorConfig, contraction_alpha, estimate_lipschitz,
                         iterate_to_fixed_point, normalized_gradient_map, sample_pairs)
from .geometry import annealing_factor
from .nn import RUN_CSV_HEADER, MlpSpec, train
from .objectives import Quadratic, ReddiSequence
from .online import CSV_HEADER as ONLINE_CSV_HEADER
from .online import log_checkpoints, run_online
from .optimizers import HyperParams, canonical_name, default_hyperparams, make_optimizer
from .rng import SplitMix64

DATA_DIR_ENV = "GEOADALER_DATA_DIR"

TRAIN_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


def build_parser():
    parser = argparse.ArgumentParser(prog="geoadaler",
                                     description="geometric adaptive optimizer experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind)
        p.add_argument("--config", default=None, help="key = value config file")
        p.add_argument("--out", default=None, help="output directory (default: run-<kind>)")
        p.add_argument("--quiet", action="store_true")
        p.add_argument("--seed", type=int, action="append")
        p.add_argument("--optimizer", action="append")
        p.add_argument("--epochs", type=int)
        p.add_argument("--batch-size", type=int, dest="batch_size")
        p.add_argument("--gamma", type=float)
        p.add_argument("--beta", type=float)
        p.add_argument("--lambda", type=float, dest="lam")
        p.add_argument("--eps", type=float, action="append")
        p.add_argument("--T", type=int, dest="T")
        p.add_argument("--C", type=float, dest="C")
        p.add_argument("--subset", type=int)
        p.add_argument("--data-dir", dest="data_dir")
    return parser


def resolve_config(args):
    cfg = parse_config(args.config) if args.config else RunConfig()
    overrides = {
        "kind": args.subcommand,
        "seed": args.seed,
        "optimizer": args.optimizer,
        "epochs": args.epochs,
        "batch_size": args.batch_size,
        "gamma": args.gamma,
        "beta": args.beta,
        "lam": args.lam,
        "eps": args.eps,
        "T": args.T,
        "C": args.C,
        "subset": args.subset,
        "data_dir": args.data_dir,
        "out_dir": args.out,
    }
    cfg = cfg.merged_with(**overrides)
    if cfg.data_dir is None:
        cfg.data_dir = os.environ.get(DATA_DIR_ENV)
    if cfg.out_dir is None:
        cfg.out_dir = f"run-{args.subcommand}"
    return validate_config(cfg)


def hyperparams_for(name, cfg, eps=None, online_defaults=False):
    """Method defaults patched with whatever the config sets."""
    h = default_hyperparams(name)
    patch = {}
    if online_defaults and canonical_name(name) in ("geoadaler", "geoadamax"):
        patch.update(gamma=1.0, lr_schedule="inverse_sqrt", beta_schedule="exponential")
    for key in ("gamma", "beta", "lam", "beta2", "momentum", "dampening", "stability"):
        value = getattr(cfg, key, None)
        if value is not None:
            patch[key] = value
    if cfg.lr_schedule is not None:
        patch["lr_schedule"] = cfg.lr_schedule
    if cfg.beta_schedule is not None:
        patch["beta_schedule"] = cfg.beta_schedule
    if eps is not None:
        patch["epsilon"] = eps
    try:
        return HyperParams(**{**_as_dict(h), **patch})
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _as_dict(h):
    from dataclasses import asdict

    return asdict(h)


def _say(cfg_quiet, message):
    if not cfg_quiet:
        print(message)


def cmd_anneal_demo(cfg, out_dir, quiet):
    lo = cfg.grid_lo if cfg.grid_lo is not None else 1e-4
    hi = cfg.grid_hi if cfg.grid_hi is not None else 1e4
    points = cfg.grid_points if cfg.grid_points is not None else 201
    if points < 1:
        raise ConfigError(f"grid_points must be >= 1, got {points}")
    eps = cfg.eps[0] if cfg.eps else 1.0
    norms = np.logspace(np.log10(lo), np.log10(hi), points)
    rows = [[n, annealing_factor([n], eps), n] for n in norms]
    write_csv(os.path.join(out_dir, "annealing.csv"),
              ["grad_norm", "geo_factor", "raw_factor"], rows)
    _say(quiet, f"wrote {points} annealing rows to {out_dir}/annealing.csv")
    return 0


def cmd_fixedpoint(cfg, out_dir, quiet):
    kappas = cfg.kappa if cfg.kappa else [1.0, 10.0, 100.0]
    seed = cfg.seed[0] if cfg.seed else 0
    n_pairs = cfg.n_pairs if cfg.n_pairs is not None else 10_000
    summary = []
    for kappa in kappas:
        dim = max(1, int(round(kappa)))
        obj = Quadratic.diag(np.linspace(1.0, float(kappa), dim))
        gamma = cfg.gamma if cfg.gamma is not None else 1.0 / float(kappa)
        op = OperatorConfig(objective=obj, gamma=gamma)
        lo, hi = np.full(dim, -10.0), np.full(dim, 10.0)
        l_hat = estimate_lipschitz(obj.grad, lo, hi, n_pairs, seed)
        lg_hat = estimate_lipschitz(normalized_gradient_map(obj), lo, hi, n_pairs, seed + 1)
        alpha = contraction_alpha(gamma, l_hat, lg_hat)
        xs, ys = sample_pairs(lo, hi, n_pairs, seed + 2)
        max_ratio = 0.0
        from .fixedpoint import apply_T

        for x, y in zip(xs, ys):
            dx = float(np.linalg.norm(x - y))
            if dx < 1e-12:
                continue
            max_ratio = max(max_ratio, float(np.linalg.norm(apply_T(op, x) - apply_T(op, y))) / dx)
        x0 = SplitMix64(seed + 3).uniform_array(dim, -10.0, 10.0)
        result = iterate_to_fixed_point(op, x0, tol=1e-8)
        dist = result.dist_to_opt
        ratios = np.divide(dist[1:], dist[:-1], out=np.zeros(len(dist) - 1), where=dist[:-1] > 0)
        rows = [[i, result.grad_norms[i], dist[i], ratios[i - 1] if i else 0.0]
                for i in range(len(dist))]
        write_csv(os.path.join(out_dir, f"fixedpoint_kappa{kappa:g}.csv"),
                  ["iteration", "grad_norm", "dist_to_opt", "contraction_ratio"], rows)
        summary.append([kappa, gamma, l_hat, lg_hat, alpha, max_ratio,
                        result.iterations, result.converged, alpha < 1.0])
        _say(quiet, f"kappa={kappa:g}: alpha={alpha:.6g} max_pair_ratio={max_ratio:.6g} "
                    f"iters={result.iterations} converged={result.converged}")
    write_csv(os.path.join(out_dir, "fixedpoint_summary.csv"),
              ["kappa", "gamma", "L_hat", "LG_hat", "alpha", "max_pair_ratio",
               "iterations", "converged", "contraction_guaranteed"], summary)
    return 0


def cmd_online(cfg, out_dir, quiet):
    T = cfg.T if cfg.T is not None else 10_000
    C = cfg.C if cfg.C is not None else 3.0
    names = cfg.optimizer if cfg.optimizer else ["geoadaler", "geoadamax", "adam", "amsgrad"]
    project = cfg.project if cfg.project is not None else True
    checkpoints = log_checkpoints(T)
    for name in names:
        h = hyperparams_for(name, cfg, online_defaults=True)
        seq = ReddiSequence(C)
        opt = make_optimizer(name, seq.dim, h)
        trace = run_online(opt, seq, T, project=project)
        path = os.path.join(out_dir, f"online_{opt.name}.csv")
        write_csv(path, ONLINE_CSV_HEADER, trace.rows(checkpoints))
        _say(quiet, f"{opt.name}: R({T})={trace.regret_at(T):.6g} "
                    f"R/T={trace.regret_over_t[-1]:.6g} -> {path}")
    return 0


def _load_train_data(cfg):
    data_dir = cfg.data_dir
    paths = {key: os.path.join(data_dir, name) for key, name in TRAIN_FILES.items()}
    missing = [p for p in paths.values() if not os.path.exists(p)]
    if missing:
        raise ConfigError(f"dataset files not found: {', '.join(missing)}")
    train_x, train_y = load_split(paths["train_images"], paths["train_labels"])
    test_x, test_y = load_split(paths["test_images"], paths["test_labels"])
    subset = cfg.subset if cfg.subset is not None else min(10_000, train_y.size)
    if subset > train_y.size:
        raise ConfigError(f"subset {subset} exceeds training set size {train_y.size}")
    return train_x[:subset], train_y[:subset], test_x, test_y


def _train_runs(cfg, out_dir, quiet, eps_values, names):
    train_x, train_y, test_x, test_y = _load_train_data(cfg)
    layers = cfg.layers if cfg.layers else [train_x.shape[1], 128, 64, 10]
    spec = MlpSpec(tuple(layers))
    epochs = cfg.epochs if cfg.epochs is not None else 20
    batch_size = cfg.batch_size if cfg.batch_size is not None else 64
    seeds = cfg.seed if cfg.seed else [0, 1, 2, 3, 4]
    summary = []
    for name in names:
        geo = canonical_name(name) in ("geoadaler", "geoadamax")
        for eps in (eps_values if geo else [None]):
            finals = []
            converged = True
            for seed in seeds:
                h = hyperparams_for(name, cfg, eps=eps)
                result, _ = train(spec, name, train_x, train_y, test_x, test_y,
                                  epochs=epochs, batch_size=batch_size, seed=seed, h=h)
                finals.append(result.final_accuracy)
                converged = converged and result.train_loss[-1] < result.train_loss[0]
                tag = f"_eps{eps:g}" if eps is not None and len(eps_values) > 1 else ""
                path = os.path.join(out_dir, f"train_{result.optimizer}{tag}_seed{seed}.csv")
                write_csv(path, RUN_CSV_HEADER, result.rows())
                _say(quiet, f"{result.optimizer}{tag} seed={seed}: "
                            f"final_acc={result.final_accuracy:.4f} -> {path}")
            summary.append([canonical_name(name),
                            eps if eps is not None else default_hyperparams(name).epsilon,
                            len(seeds), float(np.mean(finals)), float(np.min(finals)),
                            float(np.max(finals)), converged])
    write_csv(os.path.join(out_dir, "summary.csv"),
              ["optimizer", "eps", "n_seeds", "mean_final_accuracy",
               "min_final_accuracy", "max_final_accuracy", "converged"], summary)
    return 0


def cmd_train(cfg, out_dir, quiet):
    names = cfg.optimizer if cfg.optimizer else ["geoadaler", "geoadamax", "adam"]
    eps_values = cfg.eps if cfg.eps else [1.0]
    return _train_runs(cfg, out_dir, quiet, eps_values, names)


def cmd_sweep_eps(cfg, out_dir, quiet):
    names = cfg.optimizer if cfg.optimizer else ["geoadaler", "geoadamax"]
    for name in names:
        if canonical_name(name) not in ("geoadaler", "geoadamax"):
            raise ConfigError(f"sweep-eps only applies to the geometric methods, got {name!r}")
    eps_values = cfg.eps if cfg.eps else [0.1, 1.0, 10.0]
    return _train_runs(cfg, out_dir, quiet, eps_values, names)


def cmd_bench(cfg, out_dir, quiet):
    dims = [10**3, 10**5, 10**6]
    names = cfg.optimizer if cfg.optimizer else ["geoadaler", "geoadamax", "sgd_momentum",
                                                 "adagrad", "rmsprop", "adam", "amsgrad"]
    steps = 30
    rows = []
    for dim in dims:
        g = SplitMix64(1).normal_array(dim)
        for name in names:
            opt = make_optimizer(name, dim, hyperparams_for(name, cfg))
            for _ in range(3):
                opt.step(g)
            started = time.perf_counter()
            for _ in range(steps):
                opt.step(g)
            per_step = (time.perf_counter() - started) / steps
            rows.append([opt.name, dim, per_step])
            _say(quiet, f"{opt.name} dim={dim}: {per_step * 1e6:.2f} us/step")
    write_csv(os.path.join(out_dir, "bench.csv"), ["optimizer", "dim", "sec_per_step"], rows)
    return 0


_COMMANDS = {
    "anneal-demo": cmd_anneal_demo,
    "fixedpoint": cmd_fixedpoint,
    "online": cmd_online,
    "train": cmd_train,
    "sweep-eps": cmd_sweep_eps,
    "bench": cmd_bench,
}


def run_subcommand(cfg, quiet=False):
    """Dispatch a validated config; returns the process exit status."""
    out_dir = cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    write_manifest(os.path.join(out_dir, "manifest.txt"), cfg, __version__)
    return _COMMANDS[cfg.kind](cfg, out_dir, quiet)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return run_subcommand(cfg, quiet=args.quiet)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ContractError as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
