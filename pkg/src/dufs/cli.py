"""Command-line front end.

Subcommands: ``select``, ``score``, ``cluster``, ``sweep`` and ``gradcheck``.
Options may also come from a flat ``key = value`` file passed with
``--config``; flags given on the command line win.  The resolved options are
written to ``<out>/config.txt`` so that ``dufs <cmd> --config <out>/config.txt``
reproduces a run.

Exit codes: 0 success, 1 numerical failure or failed check, 2 bad input.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io as dio
from .errors import DUFSError, InvalidInputError
from .evalkit import clustering_accuracy, kmeans, selection_precision_recall, spectral_clustering
from .gradcheck import run_gradcheck
from .graph import KernelConfig, LocalMaxBandwidth, preprocess
from .objective import LambdaRegularized, ParameterFree, TrainConfig
from .score import laplacian_score_baseline
from .synth import (TwoMoonsConfig, default_breakdown_d_grid, empirical_breakdown_sweep,
                    gen_two_moons)
from .train import train

log = logging.getLogger("dufs")

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

DEFAULTS = {
    "input": None,
    "synth": None,
    "n": 100,
    "nuisance": 8,
    "nuisance_dist": "gaussian",
    "signal_var": 0.1,
    "data_seed": None,
    "loss": "param-free",
    "lambda": 1.0,
    "delta": 1e-8,
    "t": 2,
    "lr": 1.0,
    "epochs": 5000,
    "batch": None,
    "knn": 2,
    "bandwidth_c": 1.0,
    "sigma_g": 0.5,
    "seed": 0,
    "log_every": 1,
    "out": "dufs_out",
    # score
    "normalized": False,
    # cluster
    "selection": None,
    "features": None,
    "runs": 20,
    "method": "kmeans",
    "n_init": 10,
    # sweep
    "lambdas": "0.01,0.1,1,10",
    "r_grid": "3,4,5,6,7,8",
    "d_grid": None,
    "per_cluster": 50,
    "threshold": 0.7,
    "sweep_seeds": 10,
    # gradcheck
    "cases": 50,
    "n_range": "6,16",
    "d_range": "3,8",
}


def _floats(text, name):
    try:
        vals = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise InvalidInputError(f"--{name}: expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise InvalidInputError(f"--{name}: empty grid")
    return vals


def _ints(text, name):
    vals = _floats(text, name)
    if any(v != int(v) for v in vals):
        raise InvalidInputError(f"--{name}: expected integers, got {text!r}")
    return [int(v) for v in vals]


def _common_data_args(p):
    src = p.add_argument_group("data")
    src.add_argument("--input", help="CSV file: header row, optional 'label' column")
    src.add_argument("--synth", choices=["two-moons"], help="synthetic generator")
    src.add_argument("--n", type=int, help="samples for --synth")
    src.add_argument("--nuisance", type=int, help="nuisance columns for --synth")
    src.add_argument("--nuisance-dist", choices=["gaussian", "uniform"])
    src.add_argument("--signal-var", type=float, help="noise variance on the moon coordinates")
    src.add_argument("--data-seed", type=int, help="generator seed (defaults to --seed)")


def _kernel_args(p):
    g = p.add_argument_group("kernel")
    g.add_argument("--knn", type=int, help="neighbour rank k for the local bandwidth")
    g.add_argument("--bandwidth-c", type=float, help="bandwidth factor C in [1, 5]")


def _train_args(p):
    g = p.add_argument_group("training")
    g.add_argument("--loss", choices=["lambda", "param-free"])
    g.add_argument("--lambda", type=float, dest="lambda")
    g.add_argument("--delta", type=float)
    g.add_argument("--t", type=int, help="power of the random-walk matrix")
    g.add_argument("--lr", type=float)
    g.add_argument("--epochs", type=int)
    g.add_argument("--batch", type=int, help="minibatch size (default: full batch)")
    g.add_argument("--sigma-g", type=float, help="gate noise scale")
    g.add_argument("--log-every", type=int, help="trace logging stride in epochs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dufs", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_, argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="flat key = value options file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        return p

    p = add("select", "train the gates and write the selection")
    _common_data_args(p)
    _kernel_args(p)
    _train_args(p)

    p = add("score", "classic Laplacian score ranking")
    _common_data_args(p)
    _kernel_args(p)
    p.add_argument("--normalized", action="store_true", help="degree-normalized variant")

    p = add("cluster", "clustering accuracy on the top-ranked features")
    _common_data_args(p)
    _kernel_args(p)
    p.add_argument("--selection", help="selection.json written by 'select'")
    p.add_argument("--features", help="comma-separated feature counts, e.g. 2,10")
    p.add_argument("--runs", type=int, help="clustering runs (seeds) per feature count")
    p.add_argument("--method", choices=["kmeans", "spectral"])
    p.add_argument("--n-init", type=int)

    p = add("sweep", "lambda sweep or chi-square breakdown sweep")
    p.add_argument("kind", choices=["lambda", "chi"])
    _common_data_args(p)
    _kernel_args(p)
    _train_args(p)
    p.add_argument("--lambdas", help="comma-separated lambda grid")
    p.add_argument("--r-grid", help="comma-separated cluster separations")
    p.add_argument("--d-grid", help="comma-separated nuisance dimensions")
    p.add_argument("--per-cluster", type=int, help="points per cluster")
    p.add_argument("--threshold", type=float)
    p.add_argument("--sweep-seeds", type=int)

    p = add("gradcheck", "analytic vs finite-difference gradient check")
    p.add_argument("--cases", type=int)
    p.add_argument("--n-range", help="min,max samples")
    p.add_argument("--d-range", help="min,max features")
    return parser


def resolve_options(args: argparse.Namespace) -> dict:
    opts = dict(DEFAULTS)
    given = {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose")}
    if getattr(args, "config", None):
        from_file = dio.read_config(args.config)
        unknown = set(from_file) - set(DEFAULTS) - {"command", "kind"}
        if unknown:
            raise InvalidInputError(f"unknown config keys: {', '.join(sorted(unknown))}")
        opts.update({k: v for k, v in from_file.items() if k not in ("command", "kind")})
    opts.update(given)
    return opts


def kernel_config(o) -> KernelConfig:
    return KernelConfig(LocalMaxBandwidth(int(o["knn"]), float(o["bandwidth_c"])))


def train_config(o) -> TrainConfig:
    if o["epochs"] is None or int(o["epochs"]) < 1:
        raise InvalidInputError(f"--epochs must be a positive integer, got {o['epochs']}")
    if o["loss"] == "lambda":
        loss = LambdaRegularized(float(o["lambda"]))
    elif o["loss"] == "param-free":
        loss = ParameterFree(float(o["delta"]))
    else:
        raise InvalidInputError(f"unknown loss {o['loss']!r}")
    return TrainConfig(loss=loss, t=int(o["t"]), learning_rate=float(o["lr"]),
                       epochs=int(o["epochs"]),
                       batch_size=None if o["batch"] is None else int(o["batch"]),
                       kernel=kernel_config(o), seed=int(o["seed"]),
                       sigma_g=float(o["sigma_g"]))


def load_data(o) -> dio.Dataset:
    """Raw (unpreprocessed) data plus feature names, labels and, for
    synthetic data, the informative indices (as ``informative`` attribute)."""
    if o["input"] and o["synth"]:
        raise InvalidInputError("use either --input or --synth, not both")
    if o["input"]:
        ds = dio.read_csv_dataset(o["input"])
        ds.informative = None
        return ds
    if o["synth"] == "two-moons":
        seed = o["data_seed"] if o["data_seed"] is not None else o["seed"]
        data = gen_two_moons(TwoMoonsConfig(int(o["n"]), int(o["nuisance"]), float(o["signal_var"]),
                                            o["nuisance_dist"], int(seed)))
        ds = dio.Dataset(data.X, [f"f{j}" for j in range(data.X.shape[1])], data.labels)
        ds.informative = data.informative
        return ds
    raise InvalidInputError("no data source: pass --input FILE or --synth two-moons")


def _out_dir(o) -> Path:
    out = Path(o["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _save_config(out: Path, command: str, o: dict, extra=None):
    values = dict(o, command=command)
    if extra:
        values.update(extra)
    values.pop("out", None)
    dio.write_config(out / "config.txt", values)


def run_select(o, out: Path) -> int:
    ds = load_data(o)
    X = preprocess(ds.X)
    cfg = train_config(o)
    res = train(X, cfg, ground_truth=ds.informative, log_every=int(o["log_every"]))
    sel = res.selection
    payload = {
        "features": ds.feature_names,
        "open_probabilities": sel.open_probabilities,
        "mu": res.params.mu,
        "retained": sel.retained,
        "retained_names": [ds.feature_names[i] for i in sel.retained],
        "ranking": sel.ranking,
        "constant_columns": np.flatnonzero(X.constant_columns),
    }
    if ds.informative is not None:
        pr = selection_precision_recall(sel.open_probabilities, ds.informative)
        payload.update(informative=ds.informative, precision=pr.precision, recall=pr.recall)
    dio.write_json(out / "selection.json", payload)
    dio.write_csv(out / "trace.csv", ["epoch", "loss", "sum_open_prob", "precision", "recall"],
                  ([r.epoch, r.loss, r.sum_open_prob, r.precision, r.recall]
                   for r in res.trace.records))
    print(f"retained {len(sel.retained)}/{X.d} features: {payload['retained_names']}")
    return EXIT_OK


def run_score(o, out: Path) -> int:
    ds = load_data(o)
    X = preprocess(ds.X)
    fs = laplacian_score_baseline(X, kernel_config(o), normalized=bool(o["normalized"]))
    order = fs.ranking()
    dio.write_csv(out / "scores.csv", ["rank", "feature", "name", "score", "constant"],
                  ([r + 1, j, ds.feature_names[j], fs.scores[j], bool(X.constant_columns[j])]
                   for r, j in enumerate(order)))
    if X.constant_columns.any():
        log.warning("%d constant column(s) score 0 and rank first", X.constant_columns.sum())
    print(f"wrote {len(order)} scores (smaller is better)")
    return EXIT_OK


def run_cluster(o, out: Path) -> int:
    if not o["selection"]:
        raise InvalidInputError("--selection is required")
    ds = load_data(o)
    if ds.labels is None:
        raise InvalidInputError("clustering accuracy needs labels (a 'label' column)")
    X = preprocess(ds.X).values
    sel = dio.read_json(o["selection"])
    ranking = [int(i) for i in sel.get("ranking", [])]
    if sorted(ranking) != list(range(X.shape[1])):
        raise InvalidInputError(f"{o['selection']}: ranking does not match the data's {X.shape[1]} features")
    counts = _ints(o["features"], "features") if o["features"] else [len(sel.get("retained", [])) or X.shape[1]]
    if any(c < 1 or c > X.shape[1] for c in counts):
        raise InvalidInputError(f"feature counts must lie in [1, {X.shape[1]}], got {counts}")
    k = int(np.unique(ds.labels).size)
    rows = []
    for c in counts:
        cols = ranking[:c]
        accs = []
        for run in range(int(o["runs"])):
            seed = int(o["seed"]) + run
            if o["method"] == "spectral":
                pred = spectral_clustering(X[:, cols], k, kernel_config(o), seed=seed,
                                           n_init=int(o["n_init"]))
            else:
                pred = kmeans(X[:, cols], k, n_init=int(o["n_init"]), seed=seed)
            accs.append(clustering_accuracy(pred, ds.labels))
        rows.append([c, float(np.mean(accs)), float(np.std(accs))])
        print(f"{c:>6d} features: accuracy {rows[-1][1]:.4f} +- {rows[-1][2]:.4f}")
    dio.write_csv(out / "accuracy.csv", ["features_kept", "mean_acc", "std_acc"], rows)
    return EXIT_OK


def run_sweep(o, out: Path, kind: str) -> int:
    if kind == "lambda":
        o = dict(o, loss="lambda")
        lambdas = _floats(o["lambdas"], "lambdas")
        ds = load_data(o)
        X = preprocess(ds.X)
        rows = []
        for lam in lambdas:
            res = train(X, train_config(dict(o, **{"lambda": lam})),
                        ground_truth=ds.informative, log_every=int(o["epochs"]))
            sel = res.selection
            rec = res.trace.records[-1]
            rows.append([lam, len(sel.retained), " ".join(map(str, sel.retained)),
                         float(sel.open_probabilities.sum()), rec.precision, rec.recall])
            print(f"lambda={lam:g}: {len(sel.retained)} retained")
        dio.write_csv(out / "lambda_sweep.csv",
                      ["lambda", "n_retained", "retained", "sum_open_prob", "precision", "recall"], rows)
        return EXIT_OK

    r_grid = _floats(o["r_grid"], "r-grid")
    d_grid = _ints(o["d_grid"], "d-grid") if o["d_grid"] else default_breakdown_d_grid()
    sweep = empirical_breakdown_sweep(r_grid, d_grid, n=int(o["per_cluster"]),
                                      threshold=float(o["threshold"]),
                                      seeds=range(int(o["seed"]), int(o["seed"]) + int(o["sweep_seeds"])),
                                      kernel=kernel_config(o))
    dio.write_csv(out / "chi_curves.csv", ["r", "d", "mean_corr", "std_corr"], sweep.curve_rows())
    dio.write_csv(out / "chi_dstar.csv", ["r", "d_star", "censored"],
                  ([r, None if np.isnan(ds_) else ds_, bool(np.isnan(ds_))]
                   for r, ds_ in zip(sweep.r_grid, sweep.d_star)))
    try:
        slope = sweep.loglog_slope()
    except InvalidInputError:
        slope = None
    dio.write_json(out / "chi_fit.json", {"loglog_slope": slope, "threshold": sweep.threshold,
                                          "r": sweep.r_grid, "d_star": [None if np.isnan(v) else v
                                                                         for v in sweep.d_star]})
    print(f"log-log slope of d*(r): {slope}")
    return EXIT_OK


def run_gradcheck_cmd(o) -> int:
    n_range = _ints(o["n_range"], "n-range")
    d_range = _ints(o["d_range"], "d-range")
    if len(n_range) != 2 or len(d_range) != 2:
        raise InvalidInputError("--n-range and --d-range take two integers: min,max")
    if min(d_range) < 1 or min(n_range) < 3 or n_range[0] > n_range[1] or d_range[0] > d_range[1]:
        raise InvalidInputError("gradcheck needs n >= 3 and d >= 1 with min <= max")
    if int(o["cases"]) < 1:
        raise InvalidInputError("--cases must be positive")
    report = run_gradcheck(int(o["cases"]), int(o["seed"]), tuple(n_range), tuple(d_range))
    worst = report.worst
    print(f"{len(report.cases)} cases, max relative error {report.max_error:.3e} "
          f"(tolerance {report.tolerance:g})")
    if not report.passed:
        print(f"FAIL case {worst.index} (n={worst.n}, d={worst.d}, {worst.loss}, t={worst.t}) "
              f"coordinate {worst.worst_coordinate}: analytic "
              f"{worst.analytic[worst.worst_coordinate]!r} vs numeric "
              f"{worst.numeric[worst.worst_coordinate]!r}")
        return EXIT_FAIL
    print("PASS")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        o = resolve_options(args)
        if args.command == "gradcheck":
            return run_gradcheck_cmd(o)
        out = _out_dir(o)
        extra = {"kind": args.kind} if args.command == "sweep" else None
        _save_config(out, args.command, o, extra)
        if args.command == "select":
            return run_select(o, out)
        if args.command == "score":
            return run_score(o, out)
        if args.command == "cluster":
            return run_cluster(o, out)
        return run_sweep(o, out, args.kind)
    except DUFSError as exc:
        code = EXIT_INPUT if isinstance(exc, InvalidInputError) else EXIT_FAIL
        print(f"error: {exc}", file=sys.stderr)
        return code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
