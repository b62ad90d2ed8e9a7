"""Rate studies: one training cell per (n, seed), cached on disk, then a log-log fit."""

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..datagen import sample_dataset
from ..errors import ArgumentError, LabError
from ..metrics import risk
from ..models import rate_phi_n
from ..training import fit_npmle
from .config import SCHEMA_VERSION, ExperimentConfig

CELL_FIELDS = ("n", "seed", "risk", "stderr", "final_loss", "restart_index", "depth", "width", "B", "status", "message")
SUMMARY_FIELDS = ("n", "mean_risk", "stderr", "count", "phi_n", "phi_n_log3")


@dataclass
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    points: list  # (n, mean_risk, stderr)
    theoretical_exponent: float = float("nan")

    def to_dict(self):
        return asdict(self)


def fit_rate(points, theoretical_exponent=float("nan")):
    """OLS of log(mean risk) on log(n). ``points`` are (n, mean_risk[, stderr]) tuples."""
    pts = [tuple(p) + (float("nan"),) * (3 - len(p)) for p in points]
    if len(pts) < 2:
        raise ArgumentError("insufficient points: need at least 2 for a slope")
    n = np.array([p[0] for p in pts], dtype=float)
    y = np.array([p[1] for p in pts], dtype=float)
    if np.any(~(y > 0)) or np.any(n <= 0):
        raise ArgumentError("rate fit needs positive sample sizes and risks")
    if np.unique(n).size < 2:
        raise ArgumentError("insufficient points: need two distinct sample sizes")
    lx, ly = np.log(n), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(slope), float(intercept), r2, [list(map(float, p)) for p in pts], theoretical_exponent)


def run_cell(cfg: ExperimentConfig, n, seed):
    """Train and evaluate one (n, seed) cell; failures come back as a row with status 'failed'."""
    row = {"n": n, "seed": seed, "risk": float("nan"), "stderr": float("nan"), "final_loss": float("nan"),
           "restart_index": -1, "depth": 0, "width": 0, "B": float("nan"), "status": "ok", "message": ""}
    start = time.perf_counter()
    try:
        model = cfg.build_model()
        law = cfg.input_law(model.d)
        arch = cfg.arch_for(model.spec, n)
        row.update(depth=arch.L, width=arch.max_width, B=arch.B)
        ds = sample_dataset(model, n, law, seed)
        res = fit_npmle(arch, ds, cfg.train_config(seed))
        r = risk(model, res.predict, law, budget=cfg.risk.get("budget"), seed=seed, method=cfg.risk.get("method"))
        row.update(risk=r.value, stderr=r.error, final_loss=res.final_loss, restart_index=res.restart_index)
    except LabError as exc:
        row.update(status="failed", message=str(exc))
    row["wall_time"] = time.perf_counter() - start
    return row


def _cell_path(cache_dir, n, seed):
    return Path(cache_dir) / f"n{n}_s{seed}.json"


def _run_cell_cached(args):
    cfg_dict, n, seed, cache_dir = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    path = _cell_path(cache_dir, n, seed) if cache_dir else None
    if path is not None and path.exists():
        return json.loads(path.read_text(encoding="utf-8"))
    row = run_cell(cfg, n, seed)
    if path is not None and row["status"] == "ok":
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(row), encoding="utf-8")
        tmp.replace(path)
    return row


def summarize(rows, spec=None):
    """Per-n mean risk and standard error over successful seeds, in increasing n."""
    out = []
    for n in sorted({r["n"] for r in rows}):
        vals = np.array([r["risk"] for r in rows if r["n"] == n and r["status"] == "ok"], dtype=float)
        if vals.size == 0:
            continue
        se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else float("nan")
        phi = rate_phi_n(spec, n)[0] if spec is not None else float("nan")
        out.append({"n": n, "mean_risk": float(vals.mean()), "stderr": se, "count": int(vals.size),
                    "phi_n": phi, "phi_n_log3": phi * math.log(n) ** 3})
    return out


@dataclass
class StudyResult:
    config: ExperimentConfig
    rows: list
    summary: list
    fit: object = None  # RateFit, or None with fit_error set
    fit_error: str = ""
    files: dict = field(default_factory=dict)

    @property
    def complete(self):
        return all(r["status"] == "ok" for r in self.rows)

    @property
    def strictly_decreasing(self):
        means = [s["mean_risk"] for s in self.summary]
        return len(means) >= 2 and all(b < a for a, b in zip(means, means[1:]))


def run_rate_study(cfg: ExperimentConfig, jobs=1, cache=True, out_dir=None, figures=True):
    """Run every (n, seed) cell, aggregate, fit the slope and write CSV, JSON and figures."""
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cache_dir = None
    if cache:
        cache_dir = out / "cache" / cfg.content_hash()
        cache_dir.mkdir(parents=True, exist_ok=True)
    tasks = [(cfg.to_dict(), n, s, str(cache_dir) if cache_dir else None) for n in cfg.n_grid for s in cfg.seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_cell_cached, tasks))
    else:
        rows = [_run_cell_cached(t) for t in tasks]
    rows.sort(key=lambda r: (r["n"], r["seed"]))
    model = cfg.build_model()
    summary = summarize(rows, model.spec)
    phi_exp = -min(b / (b + t) for b, t in zip(model.beta_star, model.spec.t))
    fit, fit_error = None, ""
    try:
        fit = fit_rate([(s["n"], s["mean_risk"], s["stderr"]) for s in summary], phi_exp)
    except ArgumentError as exc:
        fit_error = str(exc)
    result = StudyResult(cfg, rows, summary, fit, fit_error)
    result.files = emit_plot_data(result, out)
    if figures and summary:
        from .figures import render_rate_figure

        result.files.update(render_rate_figure(result, out))
    return result


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_csv(path, fields, rows):
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("schema_version",) + tuple(fields))
            for r in rows:
                w.writerow([SCHEMA_VERSION] + [_fmt(r[k]) for k in fields])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    return str(path)


def read_csv(path):
    with Path(path).open(encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def emit_plot_data(result, path):
    """Tidy per-cell CSV, per-n summary CSV with the phi_n overlay, and a JSON digest."""
    if not result.rows:
        raise ArgumentError("no results to emit")
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "cells": write_csv(out / "cells.csv", CELL_FIELDS, result.rows),
        "summary": write_csv(out / "summary.csv", SUMMARY_FIELDS, result.summary),
    }
    digest = {
        "schema_version": SCHEMA_VERSION,
        "config": result.config.to_dict(),
        "config_hash": result.config.content_hash(),
        "fit": result.fit.to_dict() if result.fit else None,
        "fit_error": result.fit_error,
        "strictly_decreasing": result.strictly_decreasing,
        "failed_cells": [[r["n"], r["seed"], r["message"]] for r in result.rows if r["status"] != "ok"],
    }
    (out / "study.json").write_text(json.dumps(digest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    files["json"] = str(out / "study.json")
    return files
