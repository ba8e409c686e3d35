"""Config-driven Monte Carlo error-rate experiments.

A run sweeps sample sizes, draws seeded replicates, fits the configured
estimator, and records the squared population error, which for the
uniform design equals ``m^-2 |Shat - S_*|_F^2``.  The report carries the
raw rows, a log-log rate slope fitted on replicate means (and medians),
and per-``n`` envelope values from the closed-form rate calculators.

Everything is deterministic given the config: per-row seeds are a pure
function of (master seed, grid index, replicate), rows are sorted before
writing, and thread-pool scheduling cannot change any output value.
"""

from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - Python < 3.11
    import tomli as tomllib

from randkit.convex import ConvexConfig, aggregate_epsbar, solve_convex
from randkit.graphs import (
    WeightedGraph,
    complete_graph,
    cycle_graph,
    empty_graph,
    laplacian,
    load_graph,
    path_graph,
)
from randkit.kernels import SymmetricKernel
from randkit.oracles import generate_oracle
from randkit.rates import (
    ProblemSize,
    adaptive_upper_rate,
    basis_lp_norm,
    basis_sparsity,
    minimax_lower_dense,
    minimax_lower_sparse,
    polynomial_spectrum_rate,
)
from randkit.restricted import RestrictedConfig, SelectionConfig, restricted_ls, select_model
from randkit.sampling import Dataset, default_epsilon, draw_dataset, parse_noise
from randkit.spectra import SpectralDecomposition, smoothing_operator

__all__ = [
    "ExperimentConfig",
    "RateReport",
    "ResultRow",
    "EnvelopeRow",
    "graph_from_source",
    "resolve_threads",
    "row_seed",
    "run_experiment",
    "fit_rate_slope",
]

ROWS_HEADER = "n,replicate,sq_error,wall_ms,estimator"
ENVELOPE_HEADER = "n,delta1,delta4,Delta_n,beta_rate"

ESTIMATOR_KINDS = ("convex", "restricted", "select", "aggregate")


@dataclass
class ExperimentConfig:
    graph_source: str
    q: float
    r: int
    rho: float
    a: float
    n_grid: list[int]
    replicates: int
    profile: str = "smooth"
    noise: str = "none"
    estimator: str = "convex"
    estimator_options: dict = field(default_factory=dict)
    seed: int = 42
    out_dir: str | None = None
    beta: float = 1.0
    graph_weight: float = 1.0

    def __post_init__(self) -> None:
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not self.n_grid:
            raise ValueError("n_grid must be nonempty")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError("n_grid must be strictly increasing")
        if self.estimator not in ESTIMATOR_KINDS:
            raise ValueError(f"unknown estimator kind {self.estimator!r}")

    @classmethod
    def from_toml(cls, path: str | Path) -> "ExperimentConfig":
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
        exp = raw.get("experiment", {})
        graph = raw.get("graph", {})
        oracle = raw.get("oracle", {})
        est = dict(raw.get("estimator", {}))
        kind = est.pop("kind", "convex")
        return cls(
            graph_source=graph["source"],
            q=float(graph.get("power", 1.0)),
            graph_weight=float(graph.get("weight", 1.0)),
            r=int(oracle.get("rank", 1)),
            rho=float(oracle.get("rho", 1.0)),
            a=float(oracle.get("bound", 1.0)),
            profile=oracle.get("profile", "smooth"),
            noise=oracle.get("noise", "none"),
            estimator=kind,
            estimator_options=est,
            n_grid=[int(n) for n in exp["n_grid"]],
            replicates=int(exp.get("replicates", 1)),
            seed=int(exp.get("seed", 42)),
            out_dir=exp.get("out_dir"),
            beta=float(exp.get("beta", 1.0)),
        )


@dataclass
class ResultRow:
    n: int
    replicate: int
    sq_error: float
    wall_ms: float
    estimator: str


@dataclass
class EnvelopeRow:
    n: int
    delta1: float
    delta4: float
    Delta_n: float
    beta_rate: float


@dataclass
class RateReport:
    rows: list[ResultRow]
    failures: list[tuple[int, int, str]]
    envelope: list[EnvelopeRow]
    slope: float
    slope_stderr: float
    median_slope: float

    def mean_errors(self) -> dict[int, float]:
        by_n: dict[int, list[float]] = {}
        for row in self.rows:
            by_n.setdefault(row.n, []).append(row.sq_error)
        return {n: float(np.mean(v)) for n, v in sorted(by_n.items())}


def graph_from_source(source: str, weight: float = 1.0) -> WeightedGraph:
    """Build a graph from a "family:size" tag or load one from a file."""
    kind, _, arg = source.partition(":")
    builders = {
        "circle": cycle_graph,
        "cycle": cycle_graph,
        "path": path_graph,
        "complete": complete_graph,
    }
    if kind in builders and arg:
        return builders[kind](int(arg), weight)
    if kind == "empty" and arg:
        return empty_graph(int(arg))
    return load_graph(source)


def resolve_threads(explicit: int | None = None) -> int:
    if explicit is not None:
        return max(1, explicit)
    env = os.environ.get("RANDKIT_THREADS", "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def row_seed(master: int, grid_index: int, replicate: int) -> int:
    """Pure derivation of a per-row seed from (master, i, k)."""
    ss = np.random.SeedSequence(entropy=master, spawn_key=(grid_index, replicate))
    return int(ss.generate_state(1, np.uint64)[0])


def _resolve_epsilon(opts: dict, n: int, m: int, a: float) -> float:
    eps = opts.get("eps", "auto")
    if isinstance(eps, str):
        if eps != "auto":
            raise ValueError(f"eps must be a number or 'auto', got {eps!r}")
        return default_epsilon(n, m, a, big_d=float(opts.get("big_d", 32.0)))
    return float(eps)


def _fit_once(
    cfg: ExperimentConfig,
    data: Dataset,
    spec: SpectralDecomposition,
    seed: int,
) -> SymmetricKernel:
    opts = cfg.estimator_options
    n, m, a = data.n, spec.m, cfg.a
    if cfg.estimator in ("convex", "aggregate"):
        eps = _resolve_epsilon(opts, n, m, a)
        base = ConvexConfig(
            epsilon=eps,
            epsilon_bar=float(opts.get("eps_bar", 0.0)),
            a=a,
            max_iters=int(opts.get("max_iters", 50000)),
            rel_tol=float(opts.get("rel_tol", 1e-10)),
            opt_tol=float(opts.get("opt_tol", 1e-7)),
        )
        if cfg.estimator == "aggregate" or opts.get("eps_bar") == "grid":
            kernel, _ = aggregate_epsbar(data, spec, base)
            return kernel
        kernel, _ = solve_convex(data, spec, base)
        return kernel
    if cfg.estimator == "restricted":
        sub = RestrictedConfig(
            r=int(opts.get("r", cfg.r)),
            l=int(opts.get("l", spec.m)),
            a=a,
            restarts=int(opts.get("restarts", 8)),
            max_iters=int(opts.get("max_iters", 500)),
            seed=seed,
        )
        kernel, _ = restricted_ls(data, spec, sub)
        return kernel
    grid = [tuple(int(x) for x in pair) for pair in opts.get("grid", [])]
    if not grid:
        grid = [(r, l) for r in (1, 2, 4) if r <= spec.m for l in (2, 4, 8, 16) if l <= spec.m]
    sel = SelectionConfig(
        a=a,
        grid=grid,
        K=float(opts.get("K", 1.0)),
        A=float(opts.get("A", 1.0)),
        restarts=int(opts.get("restarts", 8)),
        max_iters=int(opts.get("max_iters", 500)),
        seed=seed,
    )
    _, _, kernel = select_model(data, spec, sel)
    return kernel


def _envelope(cfg: ExperimentConfig, spec: SpectralDecomposition) -> list[EnvelopeRow]:
    m = spec.m
    p = max(2.0, math.log(m))
    qp = basis_lp_norm(spec, p)
    d = basis_sparsity(spec)
    out = []
    for n in cfg.n_grid:
        ps = ProblemSize(n=n, m=m, r=cfg.r, rho=cfg.rho, a=cfg.a)
        out.append(
            EnvelopeRow(
                n=n,
                delta1=minimax_lower_dense(ps, spec, p, qp, log_m_form=True),
                delta4=minimax_lower_sparse(ps, spec, d),
                Delta_n=adaptive_upper_rate(ps, spec, 1.0).value,
                beta_rate=polynomial_spectrum_rate(ps, cfg.beta),
            )
        )
    return out


def run_experiment(cfg: ExperimentConfig, threads: int | None = None) -> RateReport:
    """Sweep the sample-size grid, fit per replicate, and report rates.

    A failed row (any raised sub-component error) is recorded with its
    reason and excluded from the rows; the report is still emitted.
    """
    graph = graph_from_source(cfg.graph_source, cfg.graph_weight)
    spec = smoothing_operator(laplacian(graph), cfg.q)
    m = spec.m
    # the target kernel is sized to leave headroom for the noise, so that
    # responses provably stay inside [-a, a]
    kind, level = parse_noise(cfg.noise)
    if kind == "binary":
        a_target = 0.5 * cfg.a
    else:
        a_target = cfg.a - level
    if a_target <= 0:
        raise ValueError(f"noise level {level} leaves no room under the bound a = {cfg.a}")
    star, _ = generate_oracle(spec, cfg.r, cfg.rho, a_target, cfg.profile, seed=cfg.seed)

    tasks = [
        (i, n, k, row_seed(cfg.seed, i, k))
        for i, n in enumerate(cfg.n_grid)
        for k in range(cfg.replicates)
    ]

    def work(task):
        i, n, k, seed = task
        try:
            data = draw_dataset(star, cfg.a, cfg.noise, n, seed=seed)
            t0 = time.perf_counter()
            fitted = _fit_once(cfg, data, spec, seed)
            wall_ms = 1e3 * (time.perf_counter() - t0)
            diff = fitted.entries - star.entries
            err = float(np.sum(diff * diff)) / m**2
            return ResultRow(n, k, err, wall_ms, cfg.estimator), None
        except Exception as exc:  # noqa: BLE001 - failure reason is the contract
            return None, (n, k, f"{type(exc).__name__}: {exc}")

    nthreads = resolve_threads(threads)
    if nthreads > 1:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            outcomes = list(pool.map(work, tasks))
    else:
        outcomes = [work(t) for t in tasks]

    rows = [row for row, _ in outcomes if row is not None]
    failures = [fail for _, fail in outcomes if fail is not None]
    rows.sort(key=lambda row: (row.n, row.replicate))

    slope = stderr = med_slope = float("nan")
    if len({row.n for row in rows}) >= 3:
        slope, stderr = fit_rate_slope(rows)
        med_slope, _ = fit_rate_slope(rows, center=np.median)

    report = RateReport(
        rows=rows,
        failures=failures,
        envelope=_envelope(cfg, spec),
        slope=slope,
        slope_stderr=stderr,
        median_slope=med_slope,
    )
    if cfg.out_dir is not None:
        write_report(report, cfg.out_dir)
    return report


def fit_rate_slope(rows: list[ResultRow], center=np.mean) -> tuple[float, float]:
    """OLS slope of log centered error against log n, with its stderr."""
    by_n: dict[int, list[float]] = {}
    for row in rows:
        by_n.setdefault(row.n, []).append(row.sq_error)
    if len(by_n) < 3:
        raise ValueError("need at least 3 distinct n values to fit a slope")
    ns = np.array(sorted(by_n))
    errs = np.array([float(center(by_n[n])) for n in ns])
    x = np.log(ns.astype(float))
    y = np.log(errs)
    xc = x - x.mean()
    slope = float(xc @ (y - y.mean()) / (xc @ xc))
    resid = y - (y.mean() + slope * xc)
    dof = len(ns) - 2
    var = float(resid @ resid) / dof / float(xc @ xc) if dof > 0 else 0.0
    return slope, float(np.sqrt(var))


def write_report(report: RateReport, out_dir: str | Path) -> tuple[Path, Path]:
    """Emit rows.csv and envelope.csv under out_dir; returns their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows_path = out / "rows.csv"
    with open(rows_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ROWS_HEADER.split(","))
        for row in report.rows:
            writer.writerow(
                [row.n, row.replicate, repr(row.sq_error), repr(row.wall_ms), row.estimator]
            )
    env_path = out / "envelope.csv"
    with open(env_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ENVELOPE_HEADER.split(","))
        for env in report.envelope:
            writer.writerow(
                [env.n, repr(env.delta1), repr(env.delta4), repr(env.Delta_n), repr(env.beta_rate)]
            )
    if report.failures:
        with open(out / "failures.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "replicate", "reason"])
            writer.writerows(report.failures)
    return rows_path, env_path
