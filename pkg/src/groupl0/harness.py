"""Synthetic group-sparse problems, recovery metrics and the benchmark runner.

Random streams: an instance is fully determined by ``GenParams.seed`` fed to
numpy's PCG64 generator. The benchmark derives one seed per (parameter point,
trial) from ``SeedSequence([seed, point, trial])``, so any trial can be
regenerated on its own and trials can run in any order or in parallel.
"""
from __future__ import annotations

import csv
import itertools
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .baselines import GompConfig, gomp
from .groups import GroupedDesign, build_partition, group_support, make_active, prepare_design
from .solver import SolverConfig, gpdasc_path, oracle_solution

__all__ = [
    "GenParams",
    "ProblemInstance",
    "correlate_groups",
    "generate_instance",
    "exact_recovery",
    "metrics",
    "trial_seed",
    "run_trial",
    "run_benchmark",
    "TRIAL_FIELDS",
    "SUMMARY_FIELDS",
]


@dataclass(frozen=True)
class GenParams:
    n: int
    p: int
    N: int
    T: int
    s: int
    dr: float = 10.0
    theta: float = 0.0
    sigma: float = 1e-3
    seed: int = 0
    sequential: bool = True

    def __post_init__(self):
        if min(self.n, self.p, self.N, self.s) < 1 or self.T < 0:
            raise ValueError("sizes must be positive")
        if self.p != self.N * self.s:
            raise ValueError(f"p = {self.p} must equal N * s = {self.N * self.s}")
        if self.T > self.N:
            raise ValueError("T cannot exceed N")
        if self.n > self.p:
            raise ValueError("n must not exceed p")
        if self.dr < 1:
            raise ValueError("dynamic range must be >= 1")
        if self.theta < 0 or self.sigma < 0:
            raise ValueError("theta and sigma must be non-negative")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    design: GroupedDesign
    x_true: np.ndarray
    y: np.ndarray
    y_clean: np.ndarray
    true_active: tuple
    params: GenParams
    noise_norm: float


def correlate_groups(raw: np.ndarray, s: int, theta: float, sequential: bool = True) -> np.ndarray:
    """Introduce correlation inside each group of ``s`` consecutive columns.

    Interior columns become ``psi_j + theta * (psi_{j-1} + psi_{j+1})`` and the
    two end columns are kept. With ``sequential=True`` the columns are updated
    in place from left to right, so ``psi_{j-1}`` is the already correlated
    column; this gives group condition numbers of order 10, 10^2 and 10^3 for
    ``theta`` = 1, 3, 10 at ``s = 4``. ``sequential=False`` uses the raw
    neighbours only, which makes ``s = 4`` groups exactly singular at
    ``theta = 1``.
    """
    out = np.array(raw, dtype=float, copy=True)
    if s < 3 or theta == 0:
        return out
    n, p = raw.shape
    src = out.reshape(n, p // s, s) if sequential else np.asarray(raw).reshape(n, p // s, s)
    ob = out.reshape(n, p // s, s)
    for j in range(1, s - 1):
        ob[:, :, j] = ob[:, :, j] + theta * (src[:, :, j - 1] + src[:, :, j + 1])
    return out


def generate_instance(params: GenParams) -> ProblemInstance:
    """Random design with inner-group correlation, a ``T``-group sparse signal and
    Gaussian noise.

    Nonzero magnitudes are uniform on ``[1, dr]`` with one entry pinned to
    exactly 1, signs are Rademacher, and the active groups are drawn uniformly
    without replacement.
    """
    rng = np.random.default_rng(params.seed)
    n, p, N, T, s = params.n, params.p, params.N, params.T, params.s
    raw = rng.standard_normal((n, p))
    psi = correlate_groups(raw, s, params.theta, params.sequential)
    psi /= np.linalg.norm(psi, axis=0)
    partition = build_partition([s] * N)
    design = prepare_design(psi, partition)

    active = tuple(sorted(int(i) for i in rng.choice(N, size=T, replace=False)))
    x = np.zeros(p)
    if T:
        cols = partition.columns(active)
        mags = rng.uniform(1.0, params.dr, size=cols.size)
        mags[rng.integers(cols.size)] = 1.0
        signs = rng.choice(np.array([-1.0, 1.0]), size=cols.size)
        x[cols] = signs * mags
    y_clean = design.matrix @ x
    noise = params.sigma * rng.standard_normal(n)
    x.setflags(write=False)
    return ProblemInstance(
        design=design, x_true=x, y=y_clean + noise, y_clean=y_clean, true_active=active,
        params=params, noise_norm=float(np.linalg.norm(noise)),
    )


def exact_recovery(found, truth) -> bool:
    return set(found) == set(truth)


def metrics(x_hat, instance: ProblemInstance, active=None) -> dict:
    """Relative l2 error, exact support recovery, PSNR and residual norm.

    ``active`` defaults to the exact-nonzero group support of ``x_hat``. When
    the true signal is zero the relative error is undefined; the absolute
    error is reported instead with ``rel_error_defined = False``.
    """
    x_hat = np.asarray(x_hat, dtype=float)
    x_true = instance.x_true
    if x_hat.shape != x_true.shape:
        raise ValueError("dimension mismatch")
    part = instance.design.partition
    found = group_support(x_hat, part) if active is None else make_active(active, part.n_groups)
    err = float(np.linalg.norm(x_hat - x_true))
    ref = float(np.linalg.norm(x_true))
    mse = float(np.mean((x_hat - x_true) ** 2))
    peak = float(np.max(np.abs(x_hat))) if x_hat.size else 0.0
    if mse == 0:
        psnr = math.inf
    elif peak == 0:
        psnr = -math.inf
    else:
        psnr = 10.0 * math.log10(peak ** 2 / mse)
    r = instance.design.matrix @ x_hat - instance.y
    return {
        "rel_error": err / ref if ref > 0 else err,
        "rel_error_defined": ref > 0,
        "exact_recovery": exact_recovery(found, instance.true_active),
        "psnr": psnr,
        "residual_norm": float(np.linalg.norm(r)),
        "n_active": len(found),
    }


# ---------------------------------------------------------------------------
# benchmark

TRIAL_FIELDS = [
    "point", "trial", "solver", "n", "p", "N", "T", "s", "dr", "theta", "sigma", "seed",
    "noise_norm", "exact_recovery", "rel_error", "rel_error_oracle", "psnr", "residual_norm",
    "n_active", "outer_steps", "total_inner", "median_inner", "termination",
]
SUMMARY_FIELDS = [
    "point", "solver", "n", "p", "N", "T", "s", "dr", "theta", "sigma", "trials",
    "recovery_prob", "mean_rel_error", "mean_rel_error_oracle", "mean_psnr",
]
TIMING_FIELDS = ["point", "trial", "solver", "time_ms"]
PARAM_KEYS = ("n", "p", "N", "T", "s", "dr", "theta", "sigma")
SOLVERS = ("gpdasc", "gomp")


def trial_seed(seed: int, point: int, trial: int) -> int:
    ss = np.random.SeedSequence([int(seed), int(point), int(trial)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class BenchOptions:
    rho: float = 0.7
    kmax: int = 5
    max_outer: int = 1000
    eps_inflation: float = 1.0
    gomp_selection: str = "raw"
    gomp_max_groups: int | None = None


def _normalize_config(config) -> dict:
    if isinstance(config, (str, os.PathLike)):
        with open(config) as fh:
            config = json.load(fh)
    if not isinstance(config, dict):
        raise ValueError("config must be a JSON object")
    for key in ("params", "trials"):
        if key not in config:
            raise ValueError(f"config is missing '{key}'")
    params = config["params"]
    unknown = set(params) - set(PARAM_KEYS)
    if unknown:
        raise ValueError(f"unknown params: {sorted(unknown)}")
    missing = {"n", "N", "T", "s"} - set(params)
    if missing:
        raise ValueError(f"params missing {sorted(missing)}")
    solvers = list(config.get("solvers", ["gpdasc"]))
    bad = [s for s in solvers if s not in SOLVERS]
    if bad:
        raise ValueError(f"unknown solvers {bad}")
    trials = int(config["trials"])
    if trials < 0:
        raise ValueError("trials must be >= 0")
    options = BenchOptions(**config.get("options", {}))
    return {
        "params": params, "trials": trials, "solvers": solvers,
        "seed": int(config.get("seed", 0)), "out_dir": config.get("out_dir"),
        "options": options,
    }


def _points(params: dict):
    """Cartesian product over list-valued parameters, in key order."""
    axes = []
    for key in PARAM_KEYS:
        if key == "p":
            continue
        val = params.get(key, {"dr": 10.0, "theta": 0.0, "sigma": 1e-3}.get(key))
        axes.append(val if isinstance(val, list) else [val])
    for combo in itertools.product(*axes):
        pt = dict(zip([k for k in PARAM_KEYS if k != "p"], combo))
        pt["p"] = int(pt["N"]) * int(pt["s"])
        if "p" in params and not isinstance(params["p"], list) and int(params["p"]) != pt["p"]:
            raise ValueError(f"p = {params['p']} inconsistent with N * s = {pt['p']}")
        yield pt


def run_trial(params: GenParams, solvers, options: BenchOptions):
    """Generate one instance and solve it with each solver.

    Returns ``(records, timings)``; records hold only deterministic values.
    """
    inst = generate_instance(params)
    x_or = oracle_solution(inst.design, inst.y, inst.true_active) if inst.true_active else None
    eps = options.eps_inflation * inst.noise_norm
    records, timings = [], []
    for solver in solvers:
        t0 = time.perf_counter()
        if solver == "gpdasc":
            cfg = SolverConfig(rho=options.rho, k_max=options.kmax, eps=eps,
                               max_outer=options.max_outer)
            path = gpdasc_path(inst.design, inst.y, cfg)
            x_hat, active = path.x, path.active
            inner = path.inner_iters
            extra = {
                "outer_steps": len(path.steps) - 1,
                "total_inner": int(inner.sum()),
                "median_inner": float(np.median(inner)) if inner.size else 0.0,
                "termination": path.termination,
            }
        else:
            max_groups = options.gomp_max_groups or max(
                1, min(inst.design.n_groups, inst.design.n // inst.design.partition.s_max))
            res = gomp(inst.design, inst.y,
                       GompConfig(max_groups=max_groups, residual_tol=eps,
                                  selection=options.gomp_selection))
            x_hat, active = res.x, res.active
            extra = {
                "outer_steps": len(res.order), "total_inner": len(res.order),
                "median_inner": 1.0 if res.order else 0.0,
                "termination": "ill-posed" if res.ill_posed else "stopped",
            }
        elapsed = 1e3 * (time.perf_counter() - t0)
        m = metrics(x_hat, inst, active)
        if x_or is not None:
            rel_or = float(np.linalg.norm(x_hat - x_or) / np.linalg.norm(x_or))
        else:
            rel_or = float(np.linalg.norm(x_hat))
        rec = {
            "solver": solver, **{k: getattr(params, k) for k in PARAM_KEYS},
            "seed": params.seed, "noise_norm": inst.noise_norm,
            "exact_recovery": int(m["exact_recovery"]), "rel_error": m["rel_error"],
            "rel_error_oracle": rel_or, "psnr": m["psnr"], "residual_norm": m["residual_norm"],
            "n_active": m["n_active"], **extra,
        }
        records.append(rec)
        timings.append({"solver": solver, "time_ms": elapsed})
    return records, timings


def _trial_job(args):
    point, trial, params, solvers, options = args
    records, timings = run_trial(params, solvers, options)
    for r in records:
        r.update(point=point, trial=trial)
    for t in timings:
        t.update(point=point, trial=trial)
    return records, timings


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _write_csv(path: Path, fields, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for row in rows:
            w.writerow([_fmt(row[f]) for f in fields])


def _summarize(records):
    groups = {}
    for r in records:
        groups.setdefault((r["point"], r["solver"]), []).append(r)
    out = []
    for (point, solver), rows in sorted(groups.items(), key=lambda kv: (kv[0][0], SOLVERS.index(kv[0][1]))):
        first = rows[0]
        out.append({
            "point": point, "solver": solver, **{k: first[k] for k in PARAM_KEYS},
            "trials": len(rows),
            "recovery_prob": float(np.mean([r["exact_recovery"] for r in rows])),
            "mean_rel_error": float(np.mean([r["rel_error"] for r in rows])),
            "mean_rel_error_oracle": float(np.mean([r["rel_error_oracle"] for r in rows])),
            "mean_psnr": float(np.mean([r["psnr"] for r in rows])),
        })
    return out


@dataclass(eq=False)
class BenchmarkResult:
    trials: list = field(default_factory=list)
    summary: list = field(default_factory=list)
    timings: list = field(default_factory=list)
    files: dict = field(default_factory=dict)


def run_benchmark(config, workers: int | None = None, out_dir=None) -> BenchmarkResult:
    """Run a parameter sweep.

    ``config`` is a dict or a path to a JSON file with keys ``params`` (any of
    ``n, p, N, T, s, dr, theta, sigma``; list values are swept), ``trials``,
    ``solvers`` (subset of ``gpdasc``, ``gomp``), ``seed``, ``out_dir`` and an
    optional ``options`` object (``rho``, ``kmax``, ``max_outer``,
    ``eps_inflation``, ``gomp_selection``, ``gomp_max_groups``).

    The discrepancy level given to the solvers is the instance's noise norm
    times ``eps_inflation``.

    When an output directory is set, ``trials.csv`` and ``summary.csv`` are
    written (deterministic given the config) together with ``timing.csv``
    (wall-clock, not reproducible).
    """
    cfg = _normalize_config(config)
    opts = cfg["options"]
    jobs = []
    for point, pt in enumerate(_points(cfg["params"])):
        for trial in range(cfg["trials"]):
            gp = GenParams(n=int(pt["n"]), p=pt["p"], N=int(pt["N"]), T=int(pt["T"]),
                           s=int(pt["s"]), dr=float(pt["dr"]), theta=float(pt["theta"]),
                           sigma=float(pt["sigma"]), seed=trial_seed(cfg["seed"], point, trial))
            jobs.append((point, trial, gp, cfg["solvers"], opts))

    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_trial_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_trial_job(j) for j in jobs]

    records = [r for recs, _ in results for r in recs]
    timings = [t for _, ts in results for t in ts]
    order = {s: i for i, s in enumerate(SOLVERS)}
    records.sort(key=lambda r: (r["point"], r["trial"], order[r["solver"]]))
    timings.sort(key=lambda r: (r["point"], r["trial"], order[r["solver"]]))
    result = BenchmarkResult(trials=records, summary=_summarize(records), timings=timings)

    out_dir = out_dir if out_dir is not None else cfg["out_dir"]
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files = {"trials": out / "trials.csv", "summary": out / "summary.csv",
                 "timing": out / "timing.csv"}
        _write_csv(files["trials"], TRIAL_FIELDS, records)
        _write_csv(files["summary"], SUMMARY_FIELDS, result.summary)
        _write_csv(files["timing"], TIMING_FIELDS, timings)
        result.files = files
    return result


def params_dict(params: GenParams) -> dict:
    return asdict(params)
