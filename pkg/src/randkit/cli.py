"""Command-line front end.

Subcommands: ``spectra`` (graph spectrum summary), ``kernel info`` (norms
of a stored kernel), ``sample`` (draw a dataset from a kernel), ``fit``
(``convex`` or ``restricted`` estimators), ``rates`` (closed-form rate
calculators), ``packing`` (lower-bound instance construction and
verification) and ``experiment run`` (config-driven Monte Carlo sweep).

Scalar results are printed as ``key=value`` lines; artifacts (kernels,
datasets, CSV reports) go to the paths given by ``--out``.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from randkit.convex import ConvexConfig, aggregate_epsbar, solve_convex
from randkit.experiments import (
    ExperimentConfig,
    graph_from_source,
    resolve_threads,
    run_experiment,
)
from randkit.graphs import laplacian
from randkit.kernels import kernel_norms, load_kernel, save_kernel
from randkit.packing import build_packing, verify_packing
from randkit.rates import (
    ProblemSize,
    adaptive_upper_rate,
    basis_lp_norm,
    basis_sparsity,
    bias_variance_cutoff,
    minimax_lower_dense,
    minimax_lower_sparse,
)
from randkit.restricted import RestrictedConfig, SelectionConfig, restricted_ls, select_model
from randkit.sampling import default_epsilon, draw_dataset, load_dataset, save_dataset
from randkit.spectra import regularized_majorant, smoothing_operator


def _print_kv(pairs) -> None:
    for key, value in pairs:
        print(f"{key}={value}")


def _load_spectrum(graph_path: str, power: float):
    # accepts a "family:size" tag or a path to a saved edge list
    return smoothing_operator(laplacian(graph_from_source(graph_path)), power)


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_spectra(args) -> int:
    spec = _load_spectrum(args.graph, args.power)
    pairs = [
        ("m", spec.m),
        ("q", _fmt(args.power)),
        ("k0", spec.k0),
        ("growth_c", _fmt(spec.growth_c)),
        ("eigenvalues", ",".join(_fmt(x) for x in spec.eigenvalues)),
    ]
    if args.gamma is not None:
        maj = regularized_majorant(spec, args.gamma)
        pairs += [
            ("gamma", _fmt(args.gamma)),
            ("majorant_breakpoints", ",".join(_fmt(x) for x in maj.breakpoints)),
            ("majorant_values", ",".join(_fmt(v) for v in maj(maj.breakpoints))),
        ]
    _print_kv(pairs)
    return 0


def _cmd_kernel(args) -> int:
    kernel = load_kernel(args.path)
    spec = _load_spectrum(args.graph, args.power) if args.graph else None
    _print_kv([("m", kernel.m)] + [(k, _fmt(v)) for k, v in kernel_norms(kernel, spec).items()])
    return 0


def _cmd_sample(args) -> int:
    kernel = load_kernel(args.kernel)
    a = args.a if args.a is not None else kernel_norms(kernel)["sup"]
    data = draw_dataset(kernel, a, args.noise, args.n, seed=args.seed)
    save_dataset(data, args.out)
    _print_kv([("n", data.n), ("m", data.m), ("a", _fmt(a)), ("out", args.out)])
    return 0


def _cmd_fit_convex(args) -> int:
    spec = _load_spectrum(args.graph, args.power)
    data = load_dataset(args.data, spec.m, args.a)
    if args.eps == "auto":
        eps = default_epsilon(data.n, spec.m, args.a, big_d=args.bigD)
    else:
        eps = float(args.eps)
    pairs = [("n", data.n), ("m", spec.m), ("eps", _fmt(eps))]
    if args.epsbar == "grid":
        cfg = ConvexConfig(epsilon=eps, epsilon_bar=0.0, a=args.a)
        kernel, chosen_l = aggregate_epsbar(data, spec, cfg)
        eps_bar = spec.lambda_at(chosen_l)
        pairs += [
            ("chosen_l", chosen_l),
            ("eps_bar", _fmt(0.0 if np.isinf(eps_bar) else 1.0 / eps_bar)),
        ]
    else:
        cfg = ConvexConfig(epsilon=eps, epsilon_bar=float(args.epsbar), a=args.a)
        kernel, report = solve_convex(data, spec, cfg)
        pairs += [
            ("eps_bar", _fmt(cfg.epsilon_bar)),
            ("iterations", report.iterations),
            ("converged", report.converged),
            ("objective", _fmt(report.objective)),
            ("residual", _fmt(report.residual)),
        ]
    save_kernel(kernel, args.out)
    pairs.append(("out", args.out))
    _print_kv(pairs)
    return 0


def _int_or_grid(text: str):
    return text if text == "grid" else int(text)


def _grid_values(m: int) -> list[int]:
    vals = []
    v = 1
    while v < m:
        vals.append(v)
        v *= 2
    vals.append(m)
    return vals


def _cmd_fit_restricted(args) -> int:
    spec = _load_spectrum(args.graph, args.power)
    data = load_dataset(args.data, spec.m, args.a)
    pairs = [("n", data.n), ("m", spec.m)]
    if args.r == "grid" or args.l == "grid":
        rs = _grid_values(spec.m) if args.r == "grid" else [args.r]
        ls = _grid_values(spec.m) if args.l == "grid" else [args.l]
        cfg = SelectionConfig(
            a=args.a,
            grid=[(r, l) for r in rs for l in ls],
            K=args.K,
            A=args.A,
            restarts=args.restarts,
        )
        r_hat, l_hat, kernel = select_model(data, spec, cfg)
        pairs += [("r_hat", r_hat), ("l_hat", l_hat)]
    else:
        cfg = RestrictedConfig(r=args.r, l=args.l, a=args.a, restarts=args.restarts)
        kernel, loss = restricted_ls(data, spec, cfg)
        pairs += [("r", args.r), ("l", args.l), ("loss", _fmt(loss))]
    save_kernel(kernel, args.out)
    pairs.append(("out", args.out))
    _print_kv(pairs)
    return 0


def _cmd_rates(args) -> int:
    spec = _load_spectrum(args.graph, args.power)
    ps = ProblemSize(n=args.n, m=spec.m, r=args.r, rho=args.rho, a=args.a)
    adaptive = adaptive_upper_rate(ps, spec, args.A)
    pairs = [
        ("n", ps.n),
        ("m", ps.m),
        ("k0", spec.k0),
        ("growth_c", _fmt(spec.growth_c)),
        ("l_tilde", adaptive.crossover_l),
        ("Delta_n", _fmt(adaptive.value)),
        ("Delta_n_characterized", adaptive.characterization_ok),
    ]
    if args.p is not None:
        qp = basis_lp_norm(spec, args.p)
        cut = bias_variance_cutoff(ps, spec, args.p, qp)
        pairs += [
            ("p", _fmt(args.p)),
            ("Q_p", _fmt(qp)),
            ("delta1", _fmt(minimax_lower_dense(ps, spec, args.p, qp))),
            ("l_bar", cut.cutoff_l),
            ("l_max", cut.l_max),
            ("delta3", _fmt(cut.capped_value)),
        ]
    if args.sparse_d is not None:
        d = args.sparse_d if args.sparse_d > 0 else basis_sparsity(spec)
        pairs += [("d", d), ("delta4", _fmt(minimax_lower_sparse(ps, spec, d)))]
    _print_kv(pairs)
    return 0


def _cmd_packing(args) -> int:
    spec = _load_spectrum(args.graph, args.power)
    ps = ProblemSize(n=args.n, m=spec.m, r=args.r, rho=args.rho, a=args.a)
    d = basis_sparsity(spec) if args.mode == "sparse" else None
    pset = build_packing(ps, spec, args.l, args.p, mode=args.mode, seed=args.seed, d=d)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for idx, K in enumerate(pset.kernels):
        save_kernel(K, out / f"kernel_{idx:03d}.txt")
    pairs = [
        ("cardinality", pset.cardinality),
        ("l", pset.l),
        ("l_prime", pset.l_prime),
        ("l_double_prime", pset.l_double_prime),
        ("r", pset.r),
        ("kappa", _fmt(pset.kappa)),
        ("mode", pset.mode),
        ("regime", pset.regime),
        ("distance_threshold", _fmt(pset.distance_threshold)),
        ("draws", pset.draws),
        ("acceptance_rate", _fmt(pset.acceptance_rate)),
    ]
    if args.action == "verify":
        report = verify_packing(pset, ps, spec, args.n)
        with open(out / "pairs.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["i", "j", "hamming", "kl_exact", "kl_quadratic", "kl_l2",
                 "kl_bound", "separation", "separation_bound"]
            )
            for pr in report.pairs:
                writer.writerow(
                    [pr.i, pr.j, pr.hamming, repr(pr.kl_exact), repr(pr.kl_quadratic),
                     repr(pr.kl_l2), repr(pr.kl_bound), repr(pr.separation),
                     repr(pr.separation_bound)]
                )
        pairs += [
            ("max_entry", _fmt(max(report.max_entries))),
            ("max_rank", max(report.ranks)),
            ("max_sobolev_sq", _fmt(max(report.sobolev_sq))),
            ("ok", report.ok),
            ("flags", ";".join(report.flags) or "none"),
        ]
    with open(out / "report.txt", "w") as fh:
        for key, value in pairs:
            fh.write(f"{key}={value}\n")
    pairs.append(("out", str(out)))
    _print_kv(pairs)
    return 0


def _cmd_experiment(args) -> int:
    cfg = ExperimentConfig.from_toml(args.config)
    report = run_experiment(cfg, threads=resolve_threads(args.threads))
    pairs = [
        ("rows", len(report.rows)),
        ("failures", len(report.failures)),
        ("slope", _fmt(report.slope)),
        ("slope_stderr", _fmt(report.slope_stderr)),
        ("median_slope", _fmt(report.median_slope)),
    ]
    if cfg.out_dir is not None:
        pairs.append(("out", cfg.out_dir))
    for n, rep, reason in report.failures:
        print(f"failure n={n} replicate={rep}: {reason}", file=sys.stderr)
    _print_kv(pairs)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="randkit",
        description="Low-rank graph-smooth kernel estimation from sampled entries.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectra", help="summarize a smoothing spectrum")
    p.add_argument("--graph", required=True)
    p.add_argument("--power", type=float, required=True)
    p.add_argument("--gamma", type=float, default=None)
    p.set_defaults(func=_cmd_spectra)

    p = sub.add_parser("kernel", help="kernel file utilities")
    ksub = p.add_subparsers(dest="action", required=True)
    pi = ksub.add_parser("info", help="print the norms of a stored kernel")
    pi.add_argument("path")
    pi.add_argument("--graph", default=None)
    pi.add_argument("--power", type=float, default=1.0)
    pi.set_defaults(func=_cmd_kernel)

    p = sub.add_parser("sample", help="draw a dataset from a stored kernel")
    p.add_argument("--kernel", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--noise", default="none")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("fit", help="fit an estimator to a dataset")
    fsub = p.add_subparsers(dest="action", required=True)
    pc = fsub.add_parser("convex", help="nuclear-norm + Sobolev penalized fit")
    pc.add_argument("--data", required=True)
    pc.add_argument("--graph", required=True)
    pc.add_argument("--power", type=float, required=True)
    pc.add_argument("--eps", default="auto")
    pc.add_argument("--epsbar", default="0.0", help="number, or 'grid' for aggregation")
    pc.add_argument("--a", type=float, required=True)
    pc.add_argument("--bigD", type=float, default=32.0)
    pc.add_argument("--out", required=True)
    pc.set_defaults(func=_cmd_fit_convex)
    pr = fsub.add_parser("restricted", help="rank/eigenbasis-restricted fit")
    pr.add_argument("--data", required=True)
    pr.add_argument("--graph", required=True)
    pr.add_argument("--power", type=float, required=True)
    pr.add_argument("--r", type=_int_or_grid, required=True)
    pr.add_argument("--l", type=_int_or_grid, required=True)
    pr.add_argument("--a", type=float, required=True)
    pr.add_argument("--K", type=float, default=1.0)
    pr.add_argument("--A", type=float, default=1.0)
    pr.add_argument("--restarts", type=int, default=8)
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=_cmd_fit_restricted)

    p = sub.add_parser("rates", help="closed-form rate calculators")
    p.add_argument("--graph", required=True)
    p.add_argument("--power", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--sparse-d", type=int, default=None,
                   help="basis sparsity; 0 means compute it from the graph")
    p.add_argument("--A", type=float, default=1.0)
    p.set_defaults(func=_cmd_rates)

    p = sub.add_parser("packing", help="minimax lower-bound instances")
    p.add_argument("action", choices=["build", "verify"])
    p.add_argument("--graph", required=True)
    p.add_argument("--power", type=float, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--mode", choices=["dense", "sparse"], default="dense")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_packing)

    p = sub.add_parser("experiment", help="config-driven Monte Carlo sweeps")
    esub = p.add_subparsers(dest="action", required=True)
    pe = esub.add_parser("run", help="run an experiment config")
    pe.add_argument("--config", required=True)
    pe.add_argument("--threads", type=int, default=None)
    pe.set_defaults(func=_cmd_experiment)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
