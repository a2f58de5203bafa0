"""Command line entry point: ``groupl0 {gen,solve,gomp,bmc,bench}``."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path


from . import io
from .baselines import GompConfig, gomp
from .coherence import bmc
from .groups import prepare_design
from .harness import GenParams, generate_instance, run_benchmark
from .solver import SolverConfig, gpdasc_path


def _load(args):
    matrix = io.read_matrix(args.design)
    partition = io.read_partition(args.partition)
    design = prepare_design(matrix, partition)
    y = io.read_vector(args.data) if getattr(args, "data", None) else None
    return design, y


def cmd_gen(args):
    params = GenParams(n=args.n, p=args.N * args.s, N=args.N, T=args.T, s=args.s, dr=args.dr,
                       theta=args.theta, sigma=args.sigma, seed=args.seed)
    inst = generate_instance(params)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_matrix(out / "design.csv", inst.design.matrix)
    io.write_partition(out / "partition.csv", inst.design.partition)
    io.write_vector(out / "y.csv", inst.y)
    io.write_vector(out / "y_clean.csv", inst.y_clean)
    io.write_vector(out / "x_true.csv", inst.x_true)
    meta = {"params": asdict(params), "true_active": list(inst.true_active),
            "noise_norm": inst.noise_norm}
    (out / "instance.json").write_text(json.dumps(meta, indent=2) + "\n")
    print(json.dumps({"out": str(out), "noise_norm": inst.noise_norm}))


def cmd_solve(args):
    design, y = _load(args)
    cfg = SolverConfig(lambda0=args.lambda0, rho=args.rho, k_max=args.kmax, eps=args.eps,
                       lambda_min=args.lambda_min, max_outer=args.max_outer)
    path = gpdasc_path(design, y, cfg)
    io.write_vector(args.out, path.x)
    if args.path_log:
        io.write_path_log(args.path_log, path)
    print(json.dumps({"termination": path.termination, "lambda": path.lam,
                      "residual": path.final.residual_norm, "active": list(path.active)}))


def cmd_gomp(args):
    design, y = _load(args)
    tol = args.residual_tol if args.residual_tol is not None else (args.eps or 0.0)
    max_groups = args.max_groups or max(1, min(design.n_groups, design.n // design.partition.s_max))
    res = gomp(design, y, GompConfig(max_groups=max_groups, residual_tol=tol,
                                     selection=args.selection))
    io.write_vector(args.out, res.x)
    print(json.dumps({"active": list(res.active), "residual": res.residual_norms[-1],
                      "ill_posed": res.ill_posed}))


def cmd_bmc(args):
    design, _ = _load(args)
    report = bmc(design)
    if args.pairwise_csv:
        io.write_matrix(args.pairwise_csv, report.pairwise)
    print(json.dumps(report.to_dict()))


def cmd_bench(args):
    res = run_benchmark(args.config, workers=args.workers, out_dir=args.out_dir)
    for row in res.summary:
        print(f"point={row['point']} solver={row['solver']} T={row['T']} theta={row['theta']} "
              f"recovery={row['recovery_prob']:.3f} rel_err={row['mean_rel_error']:.3e}")
    for name, f in res.files.items():
        print(f"wrote {name}: {f}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="groupl0", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a synthetic instance")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--N", type=int, required=True)
    g.add_argument("--T", type=int, required=True)
    g.add_argument("--s", type=int, required=True)
    g.add_argument("--dr", type=float, default=10.0)
    g.add_argument("--theta", type=float, default=0.0)
    g.add_argument("--sigma", type=float, default=1e-3)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_gen)

    def data_args(p):
        p.add_argument("--design", required=True)
        p.add_argument("--partition", required=True)
        p.add_argument("--data", required=True)
        p.add_argument("--out", required=True, help="recovered signal, one value per line")
        p.add_argument("--eps", type=float, default=None)

    s = sub.add_parser("solve", help="GPDASC continuation path")
    data_args(s)
    s.add_argument("--rho", type=float, default=0.7)
    s.add_argument("--kmax", type=int, default=5)
    s.add_argument("--lambda0", type=float, default=None)
    s.add_argument("--lambda-min", type=float, default=None)
    s.add_argument("--max-outer", type=int, default=1000)
    s.add_argument("--path-log", default=None)
    s.set_defaults(func=cmd_solve)

    o = sub.add_parser("gomp", help="group orthogonal matching pursuit")
    data_args(o)
    o.add_argument("--max-groups", type=int, default=None)
    o.add_argument("--residual-tol", type=float, default=None)
    o.add_argument("--selection", choices=["raw", "transformed"], default="raw")
    o.set_defaults(func=cmd_gomp)

    b = sub.add_parser("bmc", help="coherence report as JSON")
    b.add_argument("--design", required=True)
    b.add_argument("--partition", required=True)
    b.add_argument("--pairwise-csv", default=None)
    b.set_defaults(func=cmd_bmc)

    r = sub.add_parser("bench", help="run a benchmark sweep from a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--out-dir", default=None)
    r.add_argument("--workers", type=int, default=None)
    r.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
