"""Command-line interface: ``lcic {fit,eval,sample,hellinger,experiment,cluster}``.

Exit codes: 0 success, 2 bad input (parse errors, dimension mismatch,
malformed model), 3 fit failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings

import numpy as np

from .estimator import MarginalFitError, ProductEstimate, SplitError, fit_lcic
from .experiments import SCENARIOS, ExperimentConfig, read_report, run_experiment, write_summary
from .logconcave import FitError
from .metrics import DEFAULT_K, DEFAULT_REPEATS, gaussian_logpdf, gaussian_sampler, hellinger_sq_mc
from .mixture import ComponentCollapseError, assign_clusters, clustering_accuracy, em_fit
from .rng import RngState
from .simulate import GroundTruthModel, MarginalSpec

EXIT_INPUT = 2
EXIT_FIT = 3


class InputError(ValueError):
    pass


def read_matrix(path, header=False, columns=None) -> np.ndarray:
    """Read a comma-separated numeric matrix (``-`` for stdin)."""
    fh = sys.stdin if path == "-" else open(path, encoding="utf-8")
    try:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    finally:
        if fh is not sys.stdin:
            fh.close()
    names = None
    if header or columns:
        if not lines:
            raise InputError(f"{path}: empty file")
        names = [c.strip() for c in lines[0].split(",")]
        lines = lines[1:]
    try:
        rows = [[float(v) for v in ln.split(",")] for ln in lines]
        data = np.array(rows, dtype=np.float64)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    if data.ndim != 2 or data.shape[0] == 0:
        raise InputError(f"{path}: expected a non-empty rectangular matrix")
    if not np.all(np.isfinite(data)):
        raise InputError(f"{path}: non-finite entries")
    if columns:
        try:
            idx = [names.index(c) for c in columns]
        except ValueError as exc:
            raise InputError(f"{path}: unknown column ({exc})") from exc
        data = data[:, idx]
    return data


def read_labels(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        try:
            return np.array([int(ln.strip()) for ln in fh if ln.strip()], dtype=np.int64)
        except ValueError as exc:
            raise InputError(f"{path}: {exc}") from exc


def format_matrix(rows) -> str:
    rows = np.atleast_2d(rows)
    return "".join(",".join(repr(float(v)) for v in r) + "\n" for r in rows)


def _write(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def load_model(path) -> ProductEstimate:
    try:
        with open(path, encoding="utf-8") as fh:
            return ProductEstimate.from_json(fh.read())
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def load_density(path):
    """Model JSON or ground-truth document -> ``(dim, log_density, sampler)``.

    Ground-truth documents look like ``{"kind": "gaussian", "mean": [...],
    "cov": [[...]]}`` or ``{"kind": "product", "frame": [[...]], "mean": [...],
    "marginals": [{"family": "normal", "variance": 6}, ...]}``.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from exc
    try:
        kind = doc.get("kind")
        if kind == "gaussian":
            mean = np.asarray(doc["mean"], dtype=np.float64)
            cov = np.asarray(doc["cov"], dtype=np.float64)
            return mean.size, gaussian_logpdf(mean, cov), gaussian_sampler(mean, cov)
        if kind == "product":
            margs = [MarginalSpec(**m) for m in doc["marginals"]]
            truth = GroundTruthModel(doc["frame"], margs, doc.get("mean"))
            return truth.dim, truth.logpdf, truth.sample
        est = ProductEstimate.from_dict(doc)
        return est.dim, est.log_density, est.sample
    except (KeyError, TypeError, ValueError, np.linalg.LinAlgError) as exc:
        raise InputError(f"{path}: malformed density document ({exc})") from exc


def cmd_fit(args):
    x = read_matrix(args.input, header=args.header)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        est = fit_lcic(x, ratio=args.split_ratio, method=args.method, rng=RngState(args.seed))
    _write(est.to_json() + "\n", args.output)


def cmd_eval(args):
    est = load_model(args.model)
    pts = read_matrix(args.points, header=args.header)
    if pts.shape[1] != est.dim:
        raise InputError(f"points have {pts.shape[1]} columns, model has dimension {est.dim}")
    vals = np.atleast_1d(est.log_density(pts))
    _write("".join(repr(float(v)) + "\n" for v in vals), args.output)


def cmd_sample(args):
    if args.n < 1:
        raise InputError("n must be >= 1")
    est = load_model(args.model)
    _write(format_matrix(est.sample(args.n, RngState(args.seed))), args.output)


def cmd_hellinger(args):
    da, log_a, sample_a = load_density(args.a)
    db, log_b, _ = load_density(args.b)
    if da != db:
        raise InputError(f"dimension mismatch: {da} vs {db}")
    est = hellinger_sq_mc(log_a, log_b, sample_a, args.K, args.repeats, RngState(args.seed), args.form)
    doc = dict(est.to_dict(), seed=args.seed, form=args.form, spread_ok=est.spread_ok)
    _write(json.dumps(doc, indent=1) + "\n", args.output)


def cmd_experiment(args):
    try:
        cfg = ExperimentConfig(
            scenario=args.scenario, output=args.output, dims=args.dims, sizes=args.sizes,
            seeds=args.seeds, r_grid=args.r_grid, K=args.K, repeats=args.repeats,
            data=args.data, labels=args.labels, init_labels=args.init_labels,
            columns=args.columns.split(",") if args.columns else None, header=args.header,
            n_components=args.k, iters=args.iters, resample_factor=args.resample_factor,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        _, failures = run_experiment(cfg, resume=args.resume)
    rows = read_report(args.output)
    out = args.output
    stem = out[:-4] if out.endswith(".csv") else out
    summary = write_summary(rows, stem + "_summary.csv")
    for row in summary:
        if row["kind"] == "r_star":
            print(f"r_star d={row['d']} n={row['n']}: {row['r']}", file=sys.stderr)
    violations = sum(1 for r in rows if r["status"] == "violation")
    if cfg.scenario == "stability-verify":
        print(f"bound violations: {violations}", file=sys.stderr)
    return 1 if failures else 0


def cmd_cluster(args):
    x = read_matrix(args.data, header=args.header, columns=args.columns.split(",") if args.columns else None)
    init = read_labels(args.init_labels) if args.init_labels else "random"
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model = em_fit(x, args.k, args.iters, args.resample_factor, init, RngState(args.seed))
    labels = assign_clusters(model, x)
    _write("".join(f"{int(v)}\n" for v in labels), args.output)
    if args.labels:
        truth = read_labels(args.labels)
        print(json.dumps({"accuracy": clustering_accuracy(labels, truth),
                          "weights": model.weights.tolist(),
                          "loglik": model.loglik_trace}), file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lcic", description="Log-concave independent components density estimation")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit an LC-IC model to a CSV sample matrix")
    f.add_argument("input")
    f.add_argument("-o", "--output")
    f.add_argument("--split-ratio", type=float, default=0.5)
    f.add_argument("--method", choices=("pca", "fourier", "auto"), default="auto")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--header", action="store_true", help="skip one header line")
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("eval", help="log-density of a fitted model at CSV points")
    e.add_argument("model")
    e.add_argument("points")
    e.add_argument("-o", "--output")
    e.add_argument("--header", action="store_true")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sample", help="draw samples from a fitted model")
    s.add_argument("model")
    s.add_argument("-n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_sample)

    h = sub.add_parser("hellinger", help="Monte Carlo squared Hellinger between two densities")
    h.add_argument("a", help="model JSON or ground-truth document sampled from")
    h.add_argument("b")
    h.add_argument("--K", type=int, default=DEFAULT_K)
    h.add_argument("--repeats", type=int, default=DEFAULT_REPEATS)
    h.add_argument("--seed", type=int, default=0)
    h.add_argument("--form", choices=("affinity", "literal"), default="affinity",
                   help="per-sample term: 1 - sqrt(q/p) or (sqrt(q/p) - 1)^2 / 2")
    h.add_argument("-o", "--output")
    h.set_defaults(func=cmd_hellinger)

    x = sub.add_parser("experiment", help="run an experiment grid and write a CSV report")
    x.add_argument("scenario", choices=SCENARIOS)
    x.add_argument("-o", "--output", required=True)
    x.add_argument("--dims", type=int, nargs="+")
    x.add_argument("--sizes", type=int, nargs="+")
    x.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    x.add_argument("--r-grid", type=float, nargs="+")
    x.add_argument("--K", type=int, default=DEFAULT_K)
    x.add_argument("--repeats", type=int, default=DEFAULT_REPEATS)
    x.add_argument("--resume", action="store_true")
    x.add_argument("--data")
    x.add_argument("--labels")
    x.add_argument("--init-labels")
    x.add_argument("--columns")
    x.add_argument("--header", action="store_true")
    x.add_argument("--k", type=int, default=2)
    x.add_argument("--iters", type=int, default=20)
    x.add_argument("--resample-factor", type=float, default=4.0)
    x.set_defaults(func=cmd_experiment)

    c = sub.add_parser("cluster", help="EM clustering with LC-IC mixture components")
    c.add_argument("data")
    c.add_argument("--k", type=int, default=2)
    c.add_argument("--iters", type=int, default=20)
    c.add_argument("--resample-factor", type=float, default=4.0)
    c.add_argument("--init-labels", help="file with one integer label per row")
    c.add_argument("--labels", help="true labels, to report accuracy on stderr")
    c.add_argument("--columns", help="comma-separated column names (needs a header line)")
    c.add_argument("--header", action="store_true")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_cluster)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args) or 0
    except MarginalFitError as exc:
        print(f"fit failed (direction {exc.direction}): {exc}", file=sys.stderr)
        return EXIT_FIT
    except (SplitError, FitError, ComponentCollapseError) as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT
    except (ValueError, OSError) as exc:  # includes InputError
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
