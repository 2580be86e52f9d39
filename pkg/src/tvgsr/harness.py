"""Experiment plans: grid-tuned recovery sweeps written to CSV."""

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from tvgsr.datasets import load_bundle
from tvgsr.graph import LaplacianSpec, build_knn_graph, laplacian
from tvgsr.models import (
    BASELINE_NAMES,
    ConvergenceError,
    DivergenceError,
    ObservationSet,
    SolverOptions,
    baseline_config,
    has_lowrank_term,
)
from tvgsr.solver import recover
from tvgsr.synth import (
    NoiseSpec,
    SyntheticSpec,
    add_noise,
    generate_signal,
    make_synthetic,
    sample_mask,
)

log = logging.getLogger(__name__)

CSV_COLUMNS = ["method", "sampling_rate", "noise_param", "trial", "alpha", "beta",
               "rmse", "iters", "time_s", "rmse_std", "config"]

ALPHA_GRID = [0.0, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0]
ALPHA_GRID_NOISE = [0.0, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 1e2, 1e3, 1e4]
BETA_GRID = [0.0, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0]

# parameters a plan-wide "fixed" block may set, per method
METHOD_KNOBS = {
    "GS": set(),
    "Tikhonov": {"gamma"},
    "TGSR": set(),
    "LRDS": set(),
    "Sobolev": {"epsilon", "order_r"},
    "LRGTS": {"gamma"},
    "ProposedL2": {"theta", "frac_k", "epsilon", "order_r", "sigma_erf"},
    "ProposedL1": {"theta", "frac_k", "epsilon", "order_r", "sigma_erf"},
}

EXPERIMENT_SOLVER = dict(rho=1e-6, max_iters=500, primal_tol=1e-5, record_diagnostics=False)


def rmse(X, X_hat, valid_mask=None):
    """Root mean square error over all entries, or over ``valid_mask`` only."""
    X = np.asarray(X, dtype=float)
    X_hat = np.asarray(X_hat, dtype=float)
    if X.shape != X_hat.shape:
        raise ValueError(f"shape mismatch {X.shape} vs {X_hat.shape}")
    if valid_mask is None:
        return float(np.linalg.norm(X - X_hat) / math.sqrt(X.size))
    v = np.asarray(valid_mask, dtype=bool)
    count = int(v.sum())
    if count == 0:
        raise ValueError("no valid entries to score")
    d = (X - X_hat)[v]
    return float(np.linalg.norm(d) / math.sqrt(count))


@dataclass(frozen=True)
class MethodSpec:
    """One curve of an experiment: a named method plus its own grids/overrides."""

    method: str
    label: str = ""
    alpha_grid: tuple | None = None
    beta_grid: tuple | None = None
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in BASELINE_NAMES:
            raise ValueError(f"unknown method {self.method!r}")
        if not self.label:
            object.__setattr__(self, "label", self.method)

    @classmethod
    def parse(cls, item):
        if isinstance(item, MethodSpec):
            return item
        if isinstance(item, str):
            return cls(item)
        item = dict(item)
        for key in ("alpha_grid", "beta_grid"):
            if item.get(key) is not None:
                item[key] = tuple(float(v) for v in item[key])
        return cls(**item)


@dataclass(frozen=True)
class ExperimentPlan:
    methods: tuple
    sampling_rates: tuple = (0.1, 0.2, 0.3, 0.4)
    noise_levels: tuple = ("gaussian:0.1",)
    trials: int = 10
    alpha_grid: tuple = tuple(ALPHA_GRID)
    beta_grid: tuple = tuple(BETA_GRID)
    fixed: dict = field(default_factory=lambda: {"theta": 1.8, "frac_k": 3, "sigma_erf": 1e3,
                                                 "epsilon": 0.1, "order_r": 3.0})
    solver: dict = field(default_factory=lambda: dict(EXPERIMENT_SOLVER))
    data: dict = field(default_factory=lambda: {"kind": "synthetic"})
    laplacian: str = "symmetric_normalized"
    master_seed: int = 0
    output: str | None = None
    record_time: bool = True
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(MethodSpec.parse(m) for m in self.methods))
        object.__setattr__(self, "sampling_rates", tuple(float(r) for r in self.sampling_rates))
        object.__setattr__(self, "noise_levels",
                           tuple(str(NoiseSpec.parse(n)) for n in self.noise_levels))
        object.__setattr__(self, "alpha_grid", tuple(float(a) for a in self.alpha_grid))
        object.__setattr__(self, "beta_grid", tuple(float(b) for b in self.beta_grid))
        if not self.methods:
            raise ValueError("plan needs at least one method")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.sampling_rates or not self.noise_levels:
            raise ValueError("sampling_rates and noise_levels must be non-empty")
        if not self.alpha_grid or not self.beta_grid:
            raise ValueError("parameter grids must be non-empty")
        for r in self.sampling_rates:
            if not 0 < r <= 1:
                raise ValueError(f"sampling rate {r} outside (0, 1]")
        labels = [m.label for m in self.methods]
        if len(set(labels)) != len(labels):
            raise ValueError("method labels must be unique")
        SolverOptions(**self.solver)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown plan fields: {sorted(unknown)}")
        if "solver" in d:
            d["solver"] = {**EXPERIMENT_SOLVER, **d["solver"]}
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        d = asdict(self)
        d["methods"] = [asdict(m) for m in self.methods]
        return d


def method_config(spec, plan_fixed, alpha=0.0, beta=0.0):
    """Model config for ``spec`` with plan-wide knobs and its own overrides applied."""
    overrides = {k: v for k, v in plan_fixed.items() if k in METHOD_KNOBS[spec.method]}
    overrides.update(spec.fixed)
    if not has_lowrank_term(spec.method):
        beta = 0.0
    return baseline_config(spec.method, alpha=alpha, beta=beta, **overrides)


def method_grids(spec, plan):
    alphas = spec.alpha_grid if spec.alpha_grid is not None else plan.alpha_grid
    betas = spec.beta_grid if spec.beta_grid is not None else plan.beta_grid
    if not has_lowrank_term(spec.method):
        betas = (0.0,)
    return tuple(sorted(set(alphas))), tuple(sorted(set(betas)))


@dataclass
class GridResult:
    alpha: float
    beta: float
    rmse: float
    iters: int
    time_s: float
    config: object = None
    result: object = None


def grid_search(obs, laplacian_matrix, config, alpha_grid, beta_grid, options=None):
    """Exhaustive ``(alpha, beta)`` search minimising RMSE against ``obs.ground_truth``.

    Ties keep the lexicographically smallest pair.  Grid points whose system
    is singular or whose iterates diverge are skipped.
    """
    if obs.ground_truth is None:
        raise ValueError("grid search needs ground truth")
    options = options or SolverOptions(**EXPERIMENT_SOLVER)
    best = GridResult(math.nan, math.nan, math.inf, 0, 0.0)
    for a in sorted(alpha_grid):
        for b in sorted(beta_grid):
            try:
                cfg = config.tuned(a, b)
                t0 = time.perf_counter()
                res = recover(obs, laplacian_matrix, cfg, options)
                elapsed = time.perf_counter() - t0
            except (ValueError, DivergenceError, ConvergenceError) as exc:
                log.debug("skipping alpha=%g beta=%g: %s", a, b, exc)
                continue
            err = rmse(obs.ground_truth, res.X_hat, obs.valid)
            if err < best.rmse:
                best = GridResult(a, b, err, res.iterations, elapsed, cfg, res)
    return best


def _prepare_data(plan):
    """``(truth_fn, L, valid)``; ``truth_fn(trial)`` gives the ground truth."""
    data = dict(plan.data)
    kind = data.pop("kind", "synthetic")
    lap = LaplacianSpec(plan.laplacian)
    if kind == "synthetic":
        regenerate = bool(data.pop("regenerate", False))
        data.pop("noise", None)
        base = SyntheticSpec(**data, noise=NoiseSpec())
        graph, X = make_synthetic(base)
        L = laplacian(graph, lap)
        if not regenerate:
            return (lambda trial: X), L, None
        def truth(trial):
            return generate_signal(replace(base, seed=base.seed + 1000 + trial), graph)
        return truth, L, None
    if kind == "files":
        bundle = load_bundle(data["signal"], data["coords"])
        graph = build_knn_graph(bundle.coords, int(data.get("knn_k", 5)),
                                data.get("weights", "inverse_square_distance"),
                                metric=data.get("metric", "euclidean"))
        L = laplacian(graph, lap)
        signal = np.where(bundle.valid, bundle.signal, 0.0)
        return (lambda trial: signal), L, bundle.valid
    raise ValueError(f"unknown data kind {kind!r}")


def _observe(truth, valid, rate, noise, seed):
    n, m = truth.shape
    J = sample_mask(n, m, rate, seed, universe=valid)
    Y = J * add_noise(truth, noise, seed)
    return ObservationSet(Y=Y, J=J, ground_truth=truth, valid=valid)


def _run_cell(args):
    spec, plan, truth, L, valid, rate, noise, trial = args
    seed = plan.master_seed + trial
    obs = _observe(truth, valid, rate, noise, seed)
    alphas, betas = method_grids(spec, plan)
    options = SolverOptions(**{**plan.solver, "seed": seed})
    best = grid_search(obs, L, method_config(spec, plan.fixed), alphas, betas, options)
    cfg = best.config.to_dict() if best.config is not None else None
    return {
        "method": spec.label,
        "sampling_rate": rate,
        "noise_param": NoiseSpec.parse(noise).param,
        "trial": trial,
        "alpha": best.alpha,
        "beta": best.beta,
        "rmse": best.rmse if math.isfinite(best.rmse) else math.nan,
        "iters": best.iters,
        "time_s": best.time_s if plan.record_time else 0.0,
        "rmse_std": "",
        "config": json.dumps({"model": cfg, "noise": noise, "seed": seed,
                              "laplacian": plan.laplacian, "solver": plan.solver},
                             sort_keys=True),
    }


def _aggregate(rows):
    errs = np.array([r["rmse"] for r in rows], dtype=float)
    first = rows[0]
    return {
        "method": first["method"],
        "sampling_rate": first["sampling_rate"],
        "noise_param": first["noise_param"],
        "trial": "mean",
        "alpha": "",
        "beta": "",
        "rmse": float(np.mean(errs)),
        "iters": float(np.mean([r["iters"] for r in rows])),
        "time_s": float(np.mean([r["time_s"] for r in rows])),
        "rmse_std": float(np.std(errs)),
        "config": "",
    }


def run_plan(plan, progress=None):
    """Run every (method, noise, rate, trial) cell and return rows incl. per-cell means.

    Rows come back in a fixed order regardless of ``plan.workers``; when
    ``plan.output`` is set the table is also written there.
    """
    truth_fn, L, valid = _prepare_data(plan)
    jobs = []
    for spec in plan.methods:
        for noise in plan.noise_levels:
            for rate in plan.sampling_rates:
                for trial in range(plan.trials):
                    jobs.append((spec, plan, truth_fn(trial), L, valid, rate, noise, trial))
    if plan.workers > 1:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            cell_rows = list(pool.map(_run_cell, jobs))
    else:
        cell_rows = []
        for job in jobs:
            cell_rows.append(_run_cell(job))
            if progress is not None:
                progress(cell_rows[-1])
    rows = []
    for i in range(0, len(cell_rows), plan.trials):
        group = cell_rows[i:i + plan.trials]
        rows.extend(group)
        rows.append(_aggregate(group))
    if plan.output:
        write_rows(plan.output, rows)
    return rows


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def write_rows(path, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(rows_to_csv(rows))


def summary(rows):
    """``{(method, noise_param, rate): mean RMSE}`` from the aggregate rows."""
    return {(r["method"], r["noise_param"], r["sampling_rate"]): r["rmse"]
            for r in rows if r["trial"] == "mean"}


def ablation_plan(base, method="ProposedL2"):
    """Full model against its ``alpha = 0`` and ``beta = 0`` ablations."""
    return replace(base, methods=(
        MethodSpec(method),
        MethodSpec(method, label=f"{method}[alpha=0]", alpha_grid=(0.0,)),
        MethodSpec(method, label=f"{method}[beta=0]", beta_grid=(0.0,)),
    ))


def sensitivity_plan(base, method="ProposedL2",
                     r_eps=((1.0, 0.1), (2.0, 0.1), (3.0, 0.1), (3.0, 0.01), (3.0, 1.0)),
                     sigma2=(1e2, 1e4, 1e6, 1e8)):
    """One curve per Sobolev ``(r, eps)`` pair and per ERF ``sigma^2`` value."""
    methods = [MethodSpec(method, label=f"{method}[r={r:g},eps={e:g}]",
                          fixed={"order_r": float(r), "epsilon": float(e)})
               for r, e in r_eps]
    methods += [MethodSpec(method, label=f"{method}[sigma2={s:g}]",
                           fixed={"sigma_erf": float(math.sqrt(s))})
                for s in sigma2]
    return replace(base, methods=tuple(methods))
