"""Command line entry point: ``tvgsr {synth,recover,grid,benchmark}``."""

import argparse
import json
import logging
import sys
from dataclasses import replace

from tvgsr.datasets import (
    DatasetBundle,
    load_bundle,
    make_observation,
    save_bundle,
    write_signal_csv,
)
from tvgsr.graph import LAPLACIAN_KINDS, LaplacianSpec, build_knn_graph, laplacian
from tvgsr.harness import (
    ALPHA_GRID,
    BETA_GRID,
    EXPERIMENT_SOLVER,
    ExperimentPlan,
    MethodSpec,
    grid_search,
    method_config,
    method_grids,
    rmse,
    run_plan,
)
from tvgsr.models import BASELINE_NAMES, ConvergenceError, DivergenceError, SolverOptions
from tvgsr.solver import recover
from tvgsr.synth import NoiseSpec, SyntheticSpec, make_synthetic, random_coords, sample_mask

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_DIVERGED = 2

SOLVER_CHOICES = ("auto", "direct", "cg", "dense")


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _add_data_args(p):
    p.add_argument("--signal", required=True, help="signal CSV (n rows x m columns)")
    p.add_argument("--coords", required=True, help="coordinates CSV (id,x,y)")
    p.add_argument("--knn-k", type=int, default=5)
    p.add_argument("--metric", choices=("euclidean", "haversine"), default="euclidean")
    p.add_argument("--laplacian", choices=LAPLACIAN_KINDS, default="symmetric_normalized")
    p.add_argument("--method", choices=BASELINE_NAMES, default="ProposedL2")
    p.add_argument("--rate", type=float, default=0.4, help="sampling rate in (0, 1]")
    p.add_argument("--noise", default="none", help="none | gaussian:SD | laplace:B")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--solver", choices=SOLVER_CHOICES, default="auto")
    p.add_argument("--rho", type=float, default=EXPERIMENT_SOLVER["rho"])
    p.add_argument("--rho-mode", choices=("fixed", "lipschitz"), default="fixed")
    p.add_argument("--max-iters", type=int, default=EXPERIMENT_SOLVER["max_iters"])
    p.add_argument("--tol", type=float, default=EXPERIMENT_SOLVER["primal_tol"])


def build_parser():
    parser = argparse.ArgumentParser(prog="tvgsr", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic ground-truth bundle")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--T", type=int, default=10)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--knn-k", type=int, default=5)
    p.add_argument("--area", type=float, default=100.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-signal", required=True)
    p.add_argument("--out-coords", required=True)

    p = sub.add_parser("recover", help="mask a signal, recover it once, report RMSE")
    _add_data_args(p)
    p.add_argument("--alpha", type=float, default=1e-3)
    p.add_argument("--beta", type=float, default=1e-3)
    p.add_argument("--out", help="write the recovered matrix to this CSV")

    p = sub.add_parser("grid", help="grid-search (alpha, beta) for one method")
    _add_data_args(p)
    p.add_argument("--alpha-grid", type=_floats, default=ALPHA_GRID)
    p.add_argument("--beta-grid", type=_floats, default=BETA_GRID)

    p = sub.add_parser("benchmark", help="run a JSON experiment plan")
    p.add_argument("plan", help="plan JSON file")
    p.add_argument("--out", help="override the plan's output CSV")
    p.add_argument("--workers", type=int)
    p.add_argument("--no-time", action="store_true",
                   help="write time_s as 0 so repeated runs are byte-identical")
    return parser


def _load(args):
    bundle = load_bundle(args.signal, args.coords)
    graph = build_knn_graph(bundle.coords, args.knn_k, metric=args.metric)
    L = laplacian(graph, LaplacianSpec(args.laplacian))
    n, m = bundle.shape
    mask = sample_mask(n, m, args.rate, args.seed, universe=bundle.valid)
    obs = make_observation(bundle, mask, NoiseSpec.parse(args.noise), args.seed)
    options = SolverOptions(rho=args.rho, rho_mode=args.rho_mode, max_iters=args.max_iters,
                            primal_tol=args.tol, linear_solver=args.solver, seed=args.seed,
                            record_diagnostics=False)
    return bundle, obs, L, options


def cmd_synth(args):
    spec = SyntheticSpec(n=args.n, T=args.T, kappa=args.kappa, repeats=args.repeats,
                         knn_k=args.knn_k, area=args.area, seed=args.seed)
    _, X = make_synthetic(spec)
    bundle = DatasetBundle(coords=random_coords(spec), signal=X, name="synthetic")
    save_bundle(bundle, args.out_signal, args.out_coords)
    print(json.dumps({"n": X.shape[0], "m": X.shape[1], "signal": args.out_signal,
                      "coords": args.out_coords}))
    return EXIT_OK


def cmd_recover(args):
    bundle, obs, L, options = _load(args)
    # beta is ignored by methods without a low-rank term
    cfg = method_config(MethodSpec(args.method), ExperimentPlan((args.method,)).fixed,
                        alpha=args.alpha, beta=args.beta)
    res = recover(obs, L, cfg, options)
    err = rmse(obs.ground_truth, res.X_hat, obs.valid)
    if args.out:
        write_signal_csv(args.out, res.X_hat)
    print(json.dumps({"method": args.method, "alpha": args.alpha, "beta": cfg.beta,
                      "rmse": err, "iters": res.iterations, "converged": res.converged}))
    return EXIT_OK


def cmd_grid(args):
    _, obs, L, options = _load(args)
    spec = MethodSpec(args.method, alpha_grid=tuple(args.alpha_grid),
                      beta_grid=tuple(args.beta_grid))
    plan = ExperimentPlan((spec,))
    alphas, betas = method_grids(spec, plan)
    best = grid_search(obs, L, method_config(spec, plan.fixed), alphas, betas, options)
    print(json.dumps({"method": args.method, "alpha": best.alpha, "beta": best.beta,
                      "rmse": best.rmse, "iters": best.iters}))
    return EXIT_OK


def cmd_benchmark(args):
    plan = ExperimentPlan.from_json(args.plan)
    changes = {}
    if args.out:
        changes["output"] = args.out
    if args.workers:
        changes["workers"] = args.workers
    if args.no_time:
        changes["record_time"] = False
    plan = replace(plan, **changes)
    if not plan.output:
        raise ValueError("plan has no output path; pass --out")
    rows = run_plan(plan)
    for r in rows:
        if r["trial"] == "mean":
            print(f"{r['method']:>28s} rate={r['sampling_rate']:<5g} noise={r['noise_param']:<6g}"
                  f" rmse={r['rmse']:.4f} +/- {r['rmse_std']:.4f}")
    return EXIT_OK


COMMANDS = {"synth": cmd_synth, "recover": cmd_recover, "grid": cmd_grid,
            "benchmark": cmd_benchmark}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except DivergenceError as exc:
        print(f"error: solver diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ValueError, OSError, KeyError, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
