"""Reproducible experiment grids and their CSV reports.

Each grid cell owns an RNG stream keyed by ``(scenario, d, n, r, seed)`` so
cells can run in any order or in parallel and still give identical numbers.
Report rows are written in grid order, one flush per cell; a rerun with
``resume=True`` skips cells already present in the report.
"""
from __future__ import annotations

import csv
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .estimator import fit_lcic
from .metrics import hellinger_sq_mc, kl_domination_suite, tv_domination_suite
from .mixture import assign_clusters, clustering_accuracy, em_fit
from .rng import RngState, stream_id
from .simulate import gamma_model, gaussian_model

log = logging.getLogger(__name__)

SCENARIOS = ("gaussian-compare", "gamma-compare", "split-ratio", "stability-verify", "cluster")
COLUMNS = ("scenario", "d", "n", "r", "seed", "method", "metric", "value", "std_error", "bound", "status")
TIMING_COLUMNS = ("scenario", "d", "n", "r", "seed", "wall_time")

DEFAULTS = {
    "gaussian-compare": {"dims": [2, 3, 4], "sizes": [100, 500, 1000, 2000, 3000], "r_grid": [0.5]},
    "gamma-compare": {"dims": [2, 3, 4], "sizes": [100, 500, 1000, 2000, 3000], "r_grid": [0.5]},
    "split-ratio": {"dims": [2, 3, 4, 5, 6, 7, 8, 9, 10, 15], "sizes": [2000],
                    "r_grid": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]},
    "stability-verify": {"dims": [0], "sizes": [0], "r_grid": [0.5]},
    "cluster": {"dims": [0], "sizes": [0], "r_grid": [0.5]},
}


@dataclass
class ExperimentConfig:
    scenario: str
    output: str
    dims: list = field(default_factory=list)
    sizes: list = field(default_factory=list)
    seeds: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    r_grid: list = field(default_factory=list)
    K: int = 10_000
    repeats: int = 50
    # cluster scenario
    data: str | None = None
    labels: str | None = None
    init_labels: str | None = None
    columns: list | None = None
    header: bool = False
    n_components: int = 2
    iters: int = 20
    resample_factor: float = 4.0

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        defaults = DEFAULTS[self.scenario]
        self.dims = list(self.dims or defaults["dims"])
        self.sizes = list(self.sizes or defaults["sizes"])
        self.r_grid = list(self.r_grid or defaults["r_grid"])
        if not (self.dims and self.sizes and self.seeds and self.r_grid):
            raise ValueError("dims, sizes, seeds and r_grid must be non-empty")
        if any(not 0.0 < r < 1.0 for r in self.r_grid):
            raise ValueError("r-grid values must lie in (0, 1)")
        if self.scenario == "cluster" and (self.data is None or self.labels is None):
            raise ValueError("cluster scenario needs --data and --labels")

    def cells(self):
        if self.scenario == "stability-verify":
            return [(self.scenario, 0, 0, 0.5, s) for s in self.seeds]
        if self.scenario == "cluster":
            return [(self.scenario, 0, 0, 0.5, s) for s in self.seeds]
        return [(self.scenario, int(d), int(n), float(r), int(s))
                for d in self.dims for n in self.sizes for r in self.r_grid for s in self.seeds]


def cell_rng(key) -> RngState:
    scenario, d, n, r, seed = key
    return RngState(int(seed), stream_id(scenario, int(d), int(n), f"{float(r):.6f}"))


def _row(key, **kw):
    scenario, d, n, r, seed = key
    row = {"scenario": scenario, "d": d, "n": n, "r": r, "seed": seed, "method": "",
           "metric": "", "value": "", "std_error": "", "bound": "", "status": "ok"}
    row.update(kw)
    return row


def _density_cell(cfg, key):
    scenario, d, n, r, seed = key
    rng = cell_rng(key)
    if scenario == "gamma-compare":
        if d > 6:
            raise ValueError("gamma-compare shapes 6/i need d <= 6 for shape >= 1")
        truth = gamma_model([6.0 / i for i in range(1, d + 1)])
    else:
        truth = gaussian_model([15.0 - i for i in range(d)], rng.spawn("frame"))
    x = truth.sample(n, rng.spawn("data"))
    t0 = time.perf_counter()
    est = fit_lcic(x, ratio=r, method="pca", rng=rng.spawn("fit"))
    wall = time.perf_counter() - t0
    mc = hellinger_sq_mc(truth.logpdf, est.log_density, truth.sample, cfg.K, cfg.repeats, rng.spawn("mc"))
    return [_row(key, method=est.method, metric="h2", value=mc.value, std_error=mc.std_error)], wall


def _stability_cell(cfg, key):
    rng = cell_rng(key)
    t0 = time.perf_counter()
    rows = []
    for i, rec in enumerate(kl_domination_suite(100, rng.spawn("kl"))):
        rows.append(_row(key, d=rec["d"], n=i, method="kl", metric="kl", value=rec["kl"],
                         bound=rec["bound"], status="violation" if rec["violated"] else "ok"))
    for i, rec in enumerate(tv_domination_suite(50, rng.spawn("tv"), K=cfg.K, repeats=10)):
        rows.append(_row(key, d=rec["d"], n=i, method="tv", metric="tv", value=rec["tv"],
                         std_error=rec["std_error"], bound=rec["bound"],
                         status="violation" if rec["violated"] else "ok"))
    return rows, time.perf_counter() - t0


def _cluster_cell(cfg, key):
    from .cli import read_matrix, read_labels

    x = read_matrix(cfg.data, header=cfg.header, columns=cfg.columns)
    truth = read_labels(cfg.labels)
    init = read_labels(cfg.init_labels) if cfg.init_labels else "random"
    t0 = time.perf_counter()
    model = em_fit(x, cfg.n_components, cfg.iters, cfg.resample_factor, init, cell_rng(key))
    wall = time.perf_counter() - t0
    acc = clustering_accuracy(assign_clusters(model, x), truth)
    key = (key[0], x.shape[1], x.shape[0], key[3], key[4])
    return [_row(key, method="em", metric="accuracy", value=acc)], wall


def run_cell(cfg: ExperimentConfig, key):
    try:
        if key[0] == "stability-verify":
            return _stability_cell(cfg, key)
        if key[0] == "cluster":
            return _cluster_cell(cfg, key)
        return _density_cell(cfg, key)
    except Exception as exc:  # record and keep going
        log.warning("cell %s failed: %s", key, exc)
        return [_row(key, status=f"failed: {type(exc).__name__}: {exc}".replace("\n", " "))], 0.0


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _existing_keys(path: Path):
    keys = set()
    if not path.exists():
        return keys
    with path.open(newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            keys.add(_key_of(rec))
    return keys


def _key_of(rec):
    return (rec["scenario"], str(rec["seed"]), str(rec.get("cell", "")))


def _cell_tag(key):
    scenario, d, n, r, seed = key
    return f"{d}:{n}:{float(r):.6f}"


def worker_count() -> int:
    env = os.environ.get("LCIC_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    return max(1, cap)


def run_experiment(cfg: ExperimentConfig, resume: bool = False):
    """Run every cell of the grid and write the report.

    Returns ``(rows, failures)``.  Wall times go to a ``*_timing.csv`` sidecar
    so that the main report is byte-identical across reruns.
    """
    out = Path(cfg.output)
    timing_path = out.with_name(out.stem + "_timing.csv")
    done = _existing_keys(out) if resume else set()
    cells = [k for k in cfg.cells() if (k[0], str(k[4]), _cell_tag(k)) not in done]
    mode = "a" if resume and out.exists() else "w"
    columns = ("cell",) + COLUMNS
    workers = min(worker_count(), max(1, len(cells)))
    rows_all = []
    failures = 0
    with out.open(mode, newline="", encoding="utf-8") as fh, \
            timing_path.open(mode, newline="", encoding="utf-8") as th:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        twriter = csv.DictWriter(th, fieldnames=TIMING_COLUMNS, lineterminator="\n")
        if mode == "w":
            writer.writeheader()
            twriter.writeheader()
        if workers > 1:
            pool = ProcessPoolExecutor(max_workers=workers)
            results = pool.map(run_cell, [cfg] * len(cells), cells)
        else:
            pool = None
            results = (run_cell(cfg, k) for k in cells)
        try:
            for key, (rows, wall) in zip(cells, results):
                for row in rows:
                    row = dict(row, cell=_cell_tag(key))
                    failures += row["status"].startswith("failed")
                    writer.writerow({c: _fmt(row[c]) for c in columns})
                    rows_all.append(row)
                scenario, d, n, r, seed = key
                twriter.writerow({"scenario": scenario, "d": d, "n": n, "r": r, "seed": seed,
                                  "wall_time": f"{wall:.6f}"})
                fh.flush()
                th.flush()
        finally:
            if pool is not None:
                pool.shutdown()
    return rows_all, failures


def read_report(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def summarize(rows):
    """Per-d summary rows: mean h2 per (d, n, r) and ``r_star`` per d."""
    groups = {}
    for row in rows:
        if row.get("metric") != "h2" or str(row.get("status")) != "ok":
            continue
        k = (int(row["d"]), int(row["n"]), float(row["r"]))
        groups.setdefault(k, []).append(float(row["value"]))
    means = {k: float(np.mean(v)) for k, v in groups.items()}
    out = []
    for (d, n, r), m in sorted(means.items()):
        out.append({"kind": "mean_h2", "d": d, "n": n, "r": r, "value": m})
    for d in sorted({k[0] for k in means}):
        for n in sorted({k[1] for k in means if k[0] == d}):
            cand = {k[2]: v for k, v in means.items() if k[0] == d and k[1] == n}
            if len(cand) > 1:
                out.append({"kind": "r_star", "d": d, "n": n, "r": min(cand, key=cand.get),
                            "value": min(cand.values())})
    return out


def write_summary(rows, path):
    summary = summarize(rows)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["kind", "d", "n", "r", "value"], lineterminator="\n")
        writer.writeheader()
        for row in summary:
            writer.writerow({k: _fmt(v) for k, v in row.items()})
    return summary
