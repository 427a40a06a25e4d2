"""Command-line interface: ``qkm <command> [options]``.

Exit codes: 0 success, 2 usage or validation error, 3 K-means stopped at the
iteration cap, 4 data error (unreadable, malformed or unwritable files).
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import BenchmarkConfig, env_threads, run_benchmark
from .data import (
    BUILTIN_DATASETS,
    SCALE_TARGETS,
    BlobSpec,
    Dataset,
    FeatureScaler,
    load_builtin,
    load_csv,
    make_blobs,
    subsample_split,
    write_csv,
)
from .errors import DataError, DegenerateInputError, QKMError, ShapeError
from .kmeans import INIT_METHODS, KMeansConfig, cluster_accuracy, fit_kmeans
from .plot import scatter_svg
from .qkernel import read_gram_csv, write_gram_csv
from .svm import KernelSVC

EXIT_OK, EXIT_USAGE, EXIT_NOT_CONVERGED, EXIT_DATA = 0, 2, 3, 4

log = logging.getLogger("qkmeans")


class UsageError(Exception):
    pass


def _int_list(text):
    if text is None or isinstance(text, list):
        return text
    try:
        return [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _dump_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_input(args, label_column="label") -> Dataset:
    if getattr(args, "dataset", None):
        ds = load_builtin(args.dataset)
    elif getattr(args, "input", None):
        path = Path(args.input)
        if not path.exists():
            raise DataError(f"{path}: no such file")
        with path.open(encoding="utf-8") as fh:
            header = [h.strip() for h in fh.readline().split(",")]
        use_labels = label_column if label_column and label_column in header else None
        ds = load_csv(path, label_column=use_labels)
    else:
        raise UsageError("give --input PATH or --dataset NAME")
    if getattr(args, "features", None):
        ds = ds.select_features(args.features)
    return ds


def _add_config(p):
    p.add_argument("--config", help="JSON file of option defaults; explicit flags take precedence")


# ---- gen-blobs ---------------------------------------------------------------

def cmd_gen_blobs(args):
    if args.output is None:
        raise UsageError("gen-blobs needs -o/--output")
    try:
        spec = BlobSpec(args.n, args.dims, args.k, args.std, (args.mean_low, args.mean_high), args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ds = make_blobs(spec)
    out = Path(args.output)
    write_csv(ds, out)
    _dump_json(spec.to_dict(), out.with_suffix(".json"))
    print(f"wrote {ds.n_samples} rows to {out}")
    return EXIT_OK


# ---- cluster -----------------------------------------------------------------

def cmd_cluster(args):
    if args.k is None or args.k < 1:
        raise UsageError(f"--k must be >= 1, got {args.k}")
    try:
        config = KMeansConfig(
            k=args.k,
            distance_mode=args.distance.replace("-", "_"),
            shots=args.shots,
            max_iterations=args.max_iter,
            reassignment_fraction_epsilon=args.epsilon,
            init=args.init,
            seed=args.seed,
            n_init=args.n_init,
            n_jobs=env_threads(),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ds = _load_input(args)
    if ds.n_samples < args.k:
        raise DataError(f"{ds.n_samples} points cannot form {args.k} clusters")
    scaled = FeatureScaler(args.scale).fit_transform(ds.features)
    model = fit_kmeans(scaled, config)

    if args.output:
        write_csv(ds, args.output, {"cluster": model.assignments})
    if args.trace:
        _dump_json(
            {
                "converged": model.converged,
                "iterations": model.trace_records(),
                "iterations_run": model.iterations_run,
            },
            args.trace,
        )
    summary = f"k={args.k} distance={args.distance} iterations={model.iterations_run} converged={model.converged}"
    if ds.labels is not None:
        summary += f" accuracy={cluster_accuracy(model.assignments, ds.labels):.4f}"
    print(summary)
    return EXIT_OK if model.converged else EXIT_NOT_CONVERGED


# ---- svm ---------------------------------------------------------------------

def _svm_splits(args):
    if args.kernel == "precomputed":
        return None, None
    if args.train:
        train = load_csv(args.train, label_column=args.label_column)
        test = load_csv(args.test, label_column=args.label_column) if args.test else None
        if args.features:
            train = train.select_features(args.features)
            test = test.select_features(args.features) if test is not None else None
        if test is not None and test.n_features != train.n_features:
            raise DataError("train and test files have different feature counts")
        return train, test
    ds = _load_input(args, label_column=args.label_column)
    if ds.labels is None:
        raise DataError(f"no label column {args.label_column!r} in input")
    return subsample_split(ds, args.n_train, args.n_test, stratified=True, seed=args.seed)


def cmd_svm(args):
    svc = KernelSVC(
        kernel=args.kernel,
        C=args.C,
        gamma=args.gamma if args.gamma == "scale" else float(args.gamma),
        kernel_mode=args.kernel_mode,
        shots=args.shots,
        random_state=args.seed,
    )
    if args.kernel == "precomputed":
        if not (args.gram_train and args.train_labels):
            raise UsageError("precomputed kernel needs --gram-train and --train-labels")
        gram = read_gram_csv(args.gram_train).matrix
        y = load_csv(args.train_labels, label_column=args.label_column).labels
        if y is None or y.size != gram.shape[0]:
            raise DataError("training labels do not match the Gram matrix")
        svc.fit(gram, y)
        test_rows = read_gram_csv(args.gram_test).matrix if args.gram_test else None
        test_labels = None
        if test_rows is not None and args.test_labels:
            test_labels = load_csv(args.test_labels, label_column=args.label_column).labels
        pred = svc.predict(test_rows) if test_rows is not None else np.zeros(0, dtype=int)
        test = None
    else:
        train, test = _svm_splits(args)
        if train.labels is None:
            raise DataError(f"training data has no label column {args.label_column!r}")
        scaling = "angle_interval" if args.kernel == "quantum" else args.scale
        scaler = FeatureScaler(scaling, clip=True).fit(train.features)
        svc.fit(scaler.transform(train.features), train.labels)
        if args.gram_out:
            write_gram_csv(args.gram_out, svc._kernel(scaler.transform(train.features)), args.kernel_mode, args.shots)
        pred = svc.predict(scaler.transform(test.features)) if test is not None else np.zeros(0, dtype=int)
        test_labels = test.labels if test is not None else None

    if args.output:
        if test is not None:
            write_csv(test, args.output, {"predicted": pred})
        else:
            write_csv(Dataset(np.zeros((pred.size, 0)), None, []), args.output, {"predicted": pred})
    if args.model_out:
        Path(args.model_out).write_text(svc.to_json() + "\n", encoding="utf-8")
    summary = f"kernel={args.kernel} predictions={pred.size}"
    if test_labels is not None and pred.size:
        summary += f" accuracy={np.mean(pred == test_labels):.4f}"
    print(summary)
    return EXIT_OK


# ---- benchmark ---------------------------------------------------------------

def cmd_benchmark(args):
    try:
        config = BenchmarkConfig(
            dataset=args.dataset,
            trials=args.trials,
            n_train=args.n_train,
            n_test=args.n_test,
            features=args.features,
            k=args.k,
            seed=args.seed,
            shots=args.shots,
            kmeans_distance=args.kmeans_distance.replace("-", "_"),
            kernel_mode=args.kernel_mode,
            C=args.C,
            n_init=args.n_init,
            threads=args.threads if args.threads else env_threads(),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = run_benchmark(config)
    print(report.table())
    if args.timings:
        for name, ts in report.wall_times.items():
            print(f"  {name}: {sum(ts):.2f}s")
    if args.output:
        Path(args.output).write_text(report.to_json(include_timings=args.timings), encoding="utf-8")
    return EXIT_OK


# ---- plot --------------------------------------------------------------------

def cmd_plot(args):
    if not args.output:
        raise UsageError("plot needs -o/--output")
    path = Path(args.input)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    with path.open(encoding="utf-8") as fh:
        header = [h.strip() for h in fh.readline().split(",")]
    if args.cluster_column not in header:
        raise DataError(f"{path}: no {args.cluster_column!r} column")
    ds = load_csv(path, label_column=args.cluster_column)
    if ds.n_samples == 0:
        raise DataError(f"{path}: no rows to plot")
    # load_csv densifies labels in order of appearance; re-read the raw cluster ids
    raw = np.loadtxt(path, delimiter=",", skiprows=1, usecols=header.index(args.cluster_column), ndmin=1)
    clusters = raw.astype(int)
    labels = None
    names = list(ds.feature_names)
    feats = ds.features
    if args.label_column in names:
        li = names.index(args.label_column)
        labels = feats[:, li].astype(int)
        keep = [c for c in range(feats.shape[1]) if c != li]
        feats, names = feats[:, keep], [names[c] for c in keep]
    if feats.shape[1] < 2:
        raise DataError(f"{path}: need at least 2 feature columns, found {feats.shape[1]}")
    i, j = args.features if args.features else (0, 1)
    if not (0 <= i < feats.shape[1] and 0 <= j < feats.shape[1]):
        raise UsageError(f"feature pair ({i}, {j}) outside the {feats.shape[1]} available columns")
    svg = scatter_svg(feats, clusters, labels, (i, j), names)
    Path(args.output).write_text(svg, encoding="utf-8")
    print(f"wrote {args.output}")
    return EXIT_OK


# ---- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qkm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-blobs", help="generate a Gaussian-blob dataset")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--dims", type=int, default=5)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--std", type=float, default=3.0)
    p.add_argument("--mean-low", type=float, default=-10.0)
    p.add_argument("--mean-high", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    _add_config(p)
    p.set_defaults(func=cmd_gen_blobs)

    p = sub.add_parser("cluster", help="run K-means on a CSV or bundled dataset")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--input", help="CSV path")
    src.add_argument("--dataset", choices=BUILTIN_DATASETS)
    p.add_argument("--features", type=_int_list, help="comma-separated feature indices")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--distance", choices=("classical", "quantum-exact", "quantum-shots"), default="quantum-exact")
    p.add_argument("--shots", type=int, default=100_000)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--epsilon", type=float, default=None, help="reassigned-fraction stop threshold")
    p.add_argument("--init", choices=INIT_METHODS, default="random_points")
    p.add_argument("--n-init", type=int, default=3)
    p.add_argument("--scale", choices=SCALE_TARGETS, default="unit_interval")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", help="assignments CSV")
    p.add_argument("--trace", help="per-iteration JSON trace")
    _add_config(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("svm", help="one-against-rest kernel SVM")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--input", help="labeled CSV to split")
    src.add_argument("--dataset", choices=BUILTIN_DATASETS)
    src.add_argument("--train", help="labeled training CSV")
    p.add_argument("--test", help="test CSV (with --train)")
    p.add_argument("--label-column", default="label")
    p.add_argument("--features", type=_int_list)
    p.add_argument("--n-train", type=int, default=30)
    p.add_argument("--n-test", type=int, default=30)
    p.add_argument("--kernel", choices=("quantum", "rbf", "precomputed"), default="rbf")
    p.add_argument("--kernel-mode", choices=("exact", "shots"), default="exact")
    p.add_argument("--shots", type=int, default=100_000)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--gamma", default="scale")
    p.add_argument("--scale", choices=SCALE_TARGETS, default="unit_interval", help="scaling for the rbf kernel")
    p.add_argument("--gram-train", help="precomputed training Gram CSV")
    p.add_argument("--gram-test", help="precomputed test-vs-train kernel CSV")
    p.add_argument("--train-labels", help="CSV holding training labels (precomputed kernel)")
    p.add_argument("--test-labels", help="CSV holding test labels (precomputed kernel)")
    p.add_argument("--gram-out", help="write the training Gram matrix as CSV")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", help="predictions CSV")
    p.add_argument("--model-out", help="model JSON")
    _add_config(p)
    p.set_defaults(func=cmd_svm)

    p = sub.add_parser("benchmark", help="four-algorithm trinary classification benchmark")
    p.add_argument("--dataset", choices=("wine", "iris", "blobs"), default="wine")
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--n-train", type=int, default=30)
    p.add_argument("--n-test", type=int, default=30)
    p.add_argument("--features", type=_int_list)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--shots", type=int, default=100_000)
    p.add_argument("--kmeans-distance", choices=("quantum-exact", "quantum-shots"), default="quantum-shots")
    p.add_argument("--kernel-mode", choices=("exact", "shots"), default="shots")
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--n-init", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None, help="parallel trials (default: QKM_THREADS or 1)")
    p.add_argument("--timings", action="store_true", help="report wall times (also in JSON)")
    p.add_argument("-o", "--output", help="report JSON")
    _add_config(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("plot", help="SVG scatter of an assignments CSV")
    p.add_argument("--input", required=False)
    p.add_argument("--features", type=_int_list, help="feature pair, e.g. 0,1")
    p.add_argument("--cluster-column", default="cluster")
    p.add_argument("--label-column", default="label")
    p.add_argument("-o", "--output")
    _add_config(p)
    p.set_defaults(func=cmd_plot)
    return parser


def _subparser(parser, command):
    for action in parser._subparsers._group_actions:
        if command in action.choices:
            return action.choices[command]
    raise KeyError(command)


def parse_args(argv=None):
    """Parse ``argv``, merging any ``--config`` JSON beneath explicit flags."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            overrides = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read config {args.config}: {exc}")
        if not isinstance(overrides, dict):
            parser.error("config file must hold a JSON object")
        sub = _subparser(parser, args.command)
        known = {a.dest for a in sub._actions}
        defaults = {}
        for key, value in overrides.items():
            dest = key.replace("-", "_")
            if dest not in known:
                parser.error(f"unknown config key {key!r} for {args.command}")
            if dest == "features":
                value = _int_list(value if isinstance(value, str) else ",".join(map(str, value)))
            defaults[dest] = value
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return parser, args


def main(argv=None) -> int:
    parser, args = parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"qkm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, DegenerateInputError, ShapeError) as exc:
        print(f"qkm {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"qkm {args.command}: i/o error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (QKMError, ValueError) as exc:
        print(f"qkm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
