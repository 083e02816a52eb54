"""Command line front end: ``gen``, ``train``, ``estimate``, ``eval`` and ``bench``.

Every command is deterministic given its flags. ``--config FILE`` reads
``key = value`` lines (keys are flag names without the leading dashes);
explicit flags override the file.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import parse_distribution
from .errors import DataError, DensityError
from .harness import local_shape_block, parse_estimators, parse_seeds, plot_data, run_eval, sample_rng
from .metrics import reports_to_csv
from .nn import (
    DEFAULT_HIDDEN,
    MlpConfig,
    TrainConfig,
    estimate,
    load_model,
    save_model,
    smooth_1d,
    stack_features,
    train,
)
from .samples import SampleSet
from .synthpdf import GenerationConfig, generate_dataset, read_dataset, read_sample_csv, write_dataset

log = logging.getLogger("deepdensity")


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _tag_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise DataError(f"{path}:{num}: expected key = value")
        out[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return out


def _apply_config(parser: argparse.ArgumentParser, sub: argparse.ArgumentParser, argv):
    """Re-parse with defaults from the config file so flags still win."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    values = read_config_file(args.config)
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in values.items():
        action = actions.get(key)
        if action is None:
            parser.error(f"unknown key {key!r} in {args.config}")
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            flag = raw.lower() in ("1", "true", "yes", "on")
            defaults[key] = flag if isinstance(action, argparse._StoreTrueAction) else not flag
        else:
            defaults[key] = action.type(raw) if action.type else raw
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def cmd_gen(args) -> int:
    cfg = GenerationConfig(
        dim=args.dim,
        n_functions=args.n_functions,
        points_per_sample=args.points,
        composition_scheme=args.scheme,
        include_tags=args.include_tags,
        exclude_tags=args.exclude_tags,
        seed=args.seed,
    )
    ds = generate_dataset(cfg)
    out = write_dataset(ds, args.out)
    log.info("wrote %d samples to %s (%d regenerations)", len(ds.samples), out, ds.retries)
    return 0


def cmd_train(args) -> int:
    data = read_dataset(args.dataset)
    k = args.k
    tx, ty = stack_features(((data.points[i], data.truths[i]) for i in data.train_idx), k)
    vx, vy = stack_features(((data.points[i], data.truths[i]) for i in data.val_idx), k)
    mcfg = MlpConfig(k=k, hidden_widths=tuple(args.hidden), dim=data.dim,
                     reference_n=int(data.manifest["config"]["points_per_sample"]))
    tcfg = TrainConfig(lr0=args.lr, lr_decay=args.lr_decay, batch_size=args.batch_size,
                       epochs=args.epochs, ensemble_size=args.ensemble, seed=args.seed,
                       dtype=args.dtype)
    model = train(tx, ty, vx, vy, tcfg, mcfg)
    model.train_meta["dataset"] = str(args.dataset)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_model(model, out / "model.json")
    with open(out / "training_curve.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["member", "epoch", "lr", "train_mse", "val_mse"])
        for c in model.train_meta["curves"]:
            w.writerow([c["member"], c["epoch"], repr(c["lr"]), repr(c["train_mse"]), repr(c["val_mse"])])
    log.info("selected member %d epoch %d, validation MSE %.5g",
             model.train_meta["selected_member"], model.train_meta["selected_epoch"],
             model.train_meta["best_val_mse"])
    return 0


def _read_points(path):
    pts, _, _ = read_sample_csv(path)
    return pts


def cmd_estimate(args) -> int:
    model = load_model(args.model)
    sample = SampleSet.from_points(_read_points(args.sample))
    queries = sample.points if args.queries is None else _read_points(args.queries)
    if queries.shape[1] != sample.dim:
        raise DataError(f"query dimension {queries.shape[1]} != sample dimension {sample.dim}")
    p_hat = estimate(model, sample, queries)
    cols = [f"x{j}" for j in range(sample.dim)] + ["p_hat"]
    table = [queries, p_hat[:, None]]
    if sample.dim == 1 and args.smooth:
        cols.append("p_hat_smooth")
        table.append(smooth_1d(queries, p_hat, args.smooth_coef)[:, None])
    _write_table(args.out, cols, np.hstack(table))
    return 0


def _write_table(path, cols, rows):
    fh = sys.stdout if path in (None, "-") else open(path, "w", newline="")
    try:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(format(float(v), ".17g") for v in row) + "\n")
    finally:
        if fh is not sys.stdout:
            fh.close()


def cmd_eval(args) -> int:
    model = load_model(args.model) if args.model else None
    try:
        estimators = parse_estimators(args.estimators, model)
        for d in args.dist:
            parse_distribution(d)
        seeds = parse_seeds(args.seeds)
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports = run_eval(estimators, args.dist, args.n, seeds, ks=not args.no_ks)
    (out / "report.csv").write_text(reports_to_csv(reports))
    (out / "report.json").write_text(
        "[\n" + ",\n".join(r.to_json() for r in reports) + "\n]\n"
    )
    if args.plot_data:
        for dist in args.dist:
            for pdf in parse_distribution(dist):
                for n in args.n:
                    sample = pdf.sample(n, sample_rng(seeds[0], pdf.name, n))
                    cols = plot_data(estimators, pdf, sample)
                    _write_table(out / f"plot_{pdf.name}_n{n}.csv", list(cols),
                                 np.column_stack(list(cols.values())))
    if any(d == "local-shape:all" for d in args.dist):
        with open(out / "local_shape.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["estimator", "n", "row", "distribution", "t", "estimate"])
            for est in estimators:
                for n in args.n:
                    rows, mean = local_shape_block(est, n, seeds[0])
                    for r in rows:
                        w.writerow([est.name, n, r[0], r[1], repr(r[2]), repr(r[3])])
                    w.writerow([est.name, n, "mean", "", "", repr(mean)])
    for r in reports:
        ks = "-" if r.ks_p is None else f"{r.ks_p:.3g}"
        print(f"{r.estimator:10s} {r.distribution:16s} n={r.n:<6d} seed={r.seed:<3d} "
              f"mse={r.mse:.4g} kl={r.kl:.4g} ks_p={ks} t={r.time_s:.3g}s")
    return 0


class _UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(
        prog="deepdensity",
        description="Learned density estimation from k-nearest-neighbour distances.",
        formatter_class=fmt,
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    subs = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = subs.add_parser(name, help=help_text, description=help_text, formatter_class=fmt)
        p.add_argument("--config", default=None, help="key = value file with flag defaults")
        return p

    p = add("gen", "generate a synthetic training dataset")
    p.add_argument("--dim", type=int, default=1, help="dimension d")
    p.add_argument("--n-functions", type=int, default=1000, help="number of PDFs")
    p.add_argument("--points", type=int, default=1000, help="points per sample")
    p.add_argument("--scheme", choices=("A", "B"), default="A",
                   help="A: per-axis then combine; B: build d-dim then combine")
    p.add_argument("--include-tags", type=_tag_list, default=[], help="comma-separated tags")
    p.add_argument("--exclude-tags", type=_tag_list, default=[], help="comma-separated tags")
    p.add_argument("--seed", type=int, default=0, help="master RNG seed")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.set_defaults(func=cmd_gen)

    p = add("train", "train an estimator ensemble on a dataset")
    p.add_argument("--dataset", required=True, help="dataset directory from 'gen'")
    p.add_argument("--k", type=int, default=128, help="neighbour count (input width)")
    p.add_argument("--hidden", type=_int_list, default=list(DEFAULT_HIDDEN),
                   help="comma-separated hidden widths")
    p.add_argument("--lr", type=float, default=1e-3, help="initial Adam step size")
    p.add_argument("--lr-decay", type=float, default=0.95, help="per-epoch step size factor")
    p.add_argument("--batch-size", type=int, default=1024, help="feature rows per batch")
    p.add_argument("--epochs", type=int, default=100, help="epochs per member")
    p.add_argument("--ensemble", type=int, default=5, help="ensemble members")
    p.add_argument("--dtype", choices=("float32", "float64"), default="float32",
                   help="training precision")
    p.add_argument("--seed", type=int, default=0, help="training RNG seed")
    p.add_argument("--out", required=True, help="output directory for model.json")
    p.set_defaults(func=cmd_train)

    p = add("estimate", "estimate densities with a trained model")
    p.add_argument("--model", required=True, help="model.json")
    p.add_argument("--sample", required=True, help="CSV with columns x0..x{d-1}")
    p.add_argument("--queries", default=None, help="query CSV (default: the sample itself)")
    p.add_argument("--no-smooth", dest="smooth", action="store_false",
                   help="skip the 1D spline smoothing column")
    p.add_argument("--smooth-coef", type=float, default=0.05, help="spline residual budget factor")
    p.add_argument("--out", default="-", help="output CSV ('-' for stdout)")
    p.set_defaults(func=cmd_estimate)

    for name, help_text in (("eval", "score estimators on analytic distributions"),
                            ("bench", "eval with per-run timing in the report")):
        p = add(name, help_text)
        p.add_argument("--estimators", default="kde", help="comma list of kde, dde, dde-smooth")
        p.add_argument("--model", default=None, help="model.json (needed for dde estimators)")
        p.add_argument("--dist", action="append", required=True,
                       help="gamma, two-gaussians, five-fingers, discontinuous, cauchy[:b=B], "
                            "local-shape:N or local-shape:all (repeatable)")
        p.add_argument("--n", type=_int_list, default=[5000], help="comma-separated sample sizes")
        p.add_argument("--seeds", default="0", help="seed list, e.g. 0..9 or 1,3")
        p.add_argument("--no-ks", action="store_true", help="skip the KS resampling test")
        p.add_argument("--plot-data", action="store_true", help="write 1D plot-data CSVs")
        p.add_argument("--out", required=True, help="output directory")
        p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(argv)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        args = _apply_config(parser, sub, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"deepdensity: error: {exc}", file=sys.stderr)
        return 2
    except DensityError as exc:
        print(f"deepdensity: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, json.JSONDecodeError) as exc:
        print(f"deepdensity: {exc}", file=sys.stderr)
        return DataError.exit_code
    except ValueError as exc:
        print(f"deepdensity: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
