"""Acceptance suite: one end-to-end check per shipped guarantee.

Each test prints a tagged ``[A..]`` line with the measured quantities so a
verbose run doubles as the acceptance report.  The property suites (A01-A06,
A08, A09) finish in seconds to minutes; the two pipeline scenarios (A07, A10)
run the full aggregated estimator on a 200-vertex circle and dominate the
wall time.

Known failure: A04's rank clause.  The two-block packing members have
eigenvalues in +/- pairs, so every nonzero member has even rank >= 2 and the
rank budget ``r`` cannot hold for r in {1, 2}; the test asserts it anyway and
reports the observed ranks.
"""

from __future__ import annotations

import time

import numpy as np
import pytest

from randkit.convex import (
    ConvexConfig,
    aggregate_path,
    first_order_residual,
    solve_convex,
)
from randkit.experiments import ExperimentConfig, run_experiment
from randkit.graphs import complete_graph, cycle_graph, laplacian, path_graph
from randkit.kernels import (
    coherence_majorant,
    eigenbasis_truncation,
    kernel_norms,
    sign_and_support,
)
from randkit.oracles import generate_oracle
from randkit.packing import build_packing, verify_packing
from randkit.rates import ProblemSize, adaptive_upper_rate, bias_variance_cutoff
from randkit.restricted import RestrictedConfig, restricted_ls
from randkit.rng import make_rng
from randkit.sampling import default_epsilon, draw_dataset, epsilon_star
from randkit.spectra import (
    SpectralDecomposition,
    regularized_majorant,
    smoothing_operator,
)

GRAPH_BUILDERS = (path_graph, cycle_graph, complete_graph)


def _spec(graph, q=1.0):
    return smoothing_operator(laplacian(graph), q)


def _sq_err(kernel, target):
    """Squared distance m^{-2} |K - S|_F^2 between two kernels."""
    d = kernel.entries - target.entries
    return float(np.vdot(d, d)) / d.shape[0] ** 2


def _brute_majorant(eigenvalues, gamma, lam, grid_points=10_000):
    """sup_{s >= lam} F(s) (lam/s)^(1-gamma) over a dense geometric grid.

    Same independent evaluation as the unit suite: breakpoints joined to the
    grid, F by direct counting, round-off zeros flattened first.
    """
    eigs = np.sort(np.asarray(eigenvalues, dtype=float))
    eigs[eigs <= max(1e-10, 1e-12 * eigs[-1])] = 0.0
    top = eigs.max()
    if lam >= top:
        return float(len(eigs))
    lo = max(lam, 1e-12)
    s = np.geomspace(lo, top, grid_points)
    s = np.unique(np.concatenate([s, eigs[eigs >= lo], [lo]]))
    s = s[s >= lo]
    F = np.searchsorted(eigs, s, side="right")
    vals = F * (lam / s) ** (1.0 - gamma) if lam > 0 else F * 0.0
    base = float(np.searchsorted(eigs, lam, side="right"))
    return max(base, float(vals.max()))


@pytest.fixture(scope="module")
def circle200():
    """Circle testbed: 200 vertices, edge weight 63 so lambda_l ~ l^2 stays
    O(1) on the working range, rank-1 smooth ground truth.

    ``rho`` is calibrated from the generated kernel itself (its measured
    smoothness divided by the generator's 0.95 safety factor) so that
    regenerating from the class parameters reproduces the same kernel and the
    theoretical envelope tracks the actual smoothness instead of a vacuous
    ceiling.
    """
    spec = _spec(cycle_graph(200, 63.0), 1.0)
    star, _ = generate_oracle(spec, 1, 1e9, 0.8, seed=42)
    rho = kernel_norms(star, spec)["sobolev_l2_pi2"] / 0.95
    again, _ = generate_oracle(spec, 1, rho, 0.8, seed=42)
    np.testing.assert_allclose(again.entries, star.entries, rtol=1e-12)
    s0 = kernel_norms(star)["l2_pi2"] ** 2
    return spec, star, rho, s0


def test_a01_truncation_tail_bound():
    """Eigenbasis truncation error vs. the smoothness tail 2 rho^2/lambda_{l+1}."""
    t0 = time.time()
    rng = make_rng(101)
    specs = {}
    worst_slack = -np.inf
    cross_checked = 0
    for i in range(200):
        kind = i % 3
        q = (0.5, 1.0, 2.0)[(i // 3) % 3]
        if (kind, q) not in specs:
            specs[kind, q] = _spec(GRAPH_BUILDERS[kind](60), q)
        spec = specs[kind, q]
        m = spec.m
        r = int(rng.integers(1, 6))
        star, _ = generate_oracle(spec, r, 1e9, float(rng.uniform(0.3, 1.5)), seed=3000 + i)
        rho = kernel_norms(star, spec)["sobolev_l2_pi2"]

        C = spec.eigenvectors.T @ star.entries @ spec.eigenvectors
        P = np.cumsum(np.cumsum(C * C, axis=0), axis=1)
        errs = (P[-1, -1] - np.diag(P)) / m**2  # |S - S_{*,l}|^2 for l = 1..m
        lam_next = np.append(spec.eigenvalues[1:], np.inf)
        bounds = np.full(m, np.inf)
        pos = lam_next > 0
        bounds[pos] = 2.0 * rho**2 / lam_next[pos]
        bounds += 1e-9

        slack = float(np.max(errs - bounds))
        worst_slack = max(worst_slack, slack)
        assert (errs <= bounds).all(), (
            f"oracle {i}: truncation error exceeds the tail bound by {slack:g}"
        )
        if i % 10 == 0:
            for l in (1, m // 2, m):
                direct = _sq_err(eigenbasis_truncation(star, spec, l), star)
                np.testing.assert_allclose(errs[l - 1], direct, rtol=1e-8, atol=1e-15)
            cross_checked += 1
    wall = time.time() - t0
    print(
        f"[A01] 200 oracles (m=60, all l): worst slack {worst_slack:.3e} <= 0, "
        f"{cross_checked} oracles cross-checked against the projector route; "
        f"wall {wall:.1f}s (budget 60s)"
    )
    assert wall < 300.0, f"runtime blew past any reasonable budget: {wall:.1f}s"


def test_a02_tail_sum_invariants():
    """Both weighted tail sums stay below their regularized-majorant bounds.

    At every positive eigenvalue breakpoint lam:
      sum_{lambda_k > lam} |P_L phi_k|^2 / lambda_k <= c_gamma phibar(S; lam) / lam
      sum_{lambda_k > lam} 1 / lambda_k           <= c_gamma Fbar(lam) / lam
    with c_gamma = (growth_c + gamma) / gamma.
    """
    rng = make_rng(202)
    specs = {}
    worst1 = worst2 = -np.inf
    breakpoints_checked = 0
    for i in range(50):
        gamma = (0.25, 0.5, 0.75)[i % 3]
        kind = (i // 3) % 3
        m = (25, 40)[i % 2]
        q = (0.5, 1.0, 2.0)[(i // 9) % 3]
        if (kind, m, q) not in specs:
            specs[kind, m, q] = _spec(GRAPH_BUILDERS[kind](m), q)
        spec = specs[kind, m, q]
        r = int(rng.integers(1, 4))
        star, _ = generate_oracle(spec, r, 1e9, float(rng.uniform(0.3, 1.2)), seed=4000 + i)

        maj = regularized_majorant(spec, gamma)
        c_gamma = (spec.growth_c + gamma) / gamma
        _, proj, _ = sign_and_support(star)
        energies = np.einsum("ij,jk,ki->i", spec.eigenvectors.T, proj, spec.eigenvectors)
        lam_all = spec.eigenvalues
        for lam in maj.breakpoints:
            above = lam_all > lam
            lhs1 = float(np.sum(energies[above] / lam_all[above]))
            rhs1 = c_gamma * coherence_majorant(star, spec, maj, float(lam)) / lam
            assert lhs1 <= rhs1 * (1 + 1e-10) + 1e-12, (
                f"triple {i}: coherence tail sum {lhs1} exceeds {rhs1} at lam={lam}"
            )
            lhs2 = float(np.sum(1.0 / lam_all[above]))
            rhs2 = c_gamma * maj(float(lam)) / lam
            assert lhs2 <= rhs2 * (1 + 1e-10) + 1e-12, (
                f"triple {i}: counting tail sum {lhs2} exceeds {rhs2} at lam={lam}"
            )
            if rhs1 > 0:
                worst1 = max(worst1, lhs1 / rhs1)
            worst2 = max(worst2, lhs2 / rhs2)
            breakpoints_checked += 1
    print(
        f"[A02] 50 (graph, kernel, gamma) triples, {breakpoints_checked} breakpoints, "
        f"zero violations; worst lhs/rhs ratios {worst1:.4f} (coherence) "
        f"and {worst2:.4f} (counting)"
    )


def test_a03_majorant_minimality():
    """Closed-form majorant equals the brute-force minimal envelope to 1e-6."""
    rng = make_rng(303)
    queries_checked = 0
    for i in range(20):
        gamma = (0.25, 0.5, 0.75)[i % 3]
        if i % 4 == 0:
            m = int(rng.integers(20, 51))
            spec = _spec(GRAPH_BUILDERS[i % 3](m), (0.5, 1.0, 2.0)[i % 3])
        else:
            m = int(rng.integers(10, 61))
            lam = np.sort(rng.uniform(0.05, 20.0, size=m))
            if i % 3 == 1:
                lam[: int(rng.integers(1, min(4, m)))] = 0.0
            elif i % 3 == 2:
                lam = np.sort(np.round(lam, 1) + 0.1)  # heavy ties
            lam *= 10.0 ** float(rng.uniform(-2, 2))
            spec = SpectralDecomposition(lam, np.eye(m))
        maj = regularized_majorant(spec, gamma)
        bp = maj.breakpoints
        queries = np.concatenate(
            [bp, 0.5 * (bp[:-1] + bp[1:]), [0.5 * bp[0], 2.0 * bp[-1]]]
        )
        for lam_q in queries:
            want = _brute_majorant(spec.eigenvalues, gamma, float(lam_q))
            np.testing.assert_allclose(maj(float(lam_q)), want, rtol=1e-6, atol=1e-9)
        queries_checked += len(queries)
    print(
        f"[A03] 20 spectra, {queries_checked} query points against the "
        f"10^4-point brute-force envelope, all within 1e-6"
    )


def test_a04_packing_verification():
    """Dense packing guarantees at m=64, l=32: entries, smoothness, separation,
    KL -- and the rank budget, which the two-block construction cannot meet."""
    t0 = time.time()
    spec = _spec(cycle_graph(64), 1.0)
    observed_ranks = {}
    pairs_checked = 0
    for r in (1, 2):
        ps = ProblemSize(n=4096, m=64, r=r, rho=1.0, a=1.0)
        pset = build_packing(ps, spec, l=32, p=float(np.log(64)), mode="dense", seed=2024 + r)
        report = verify_packing(pset, ps, spec, n=4096)
        assert pset.cardinality >= 2, f"r={r}: packing degenerated to {pset.cardinality} members"

        for idx, top in enumerate(report.max_entries):
            assert top <= ps.a * (1 + 1e-12), f"r={r} member {idx}: |entries| {top:g} > a"
        for idx, sob in enumerate(report.sobolev_sq):
            assert sob <= ps.rho**2 * (1 + 1e-12), (
                f"r={r} member {idx}: squared smoothness {sob:g} > rho^2"
            )
        sep_bound = 2.0**-10 * pset.kappa**2 * pset.l**2 / spec.m**2
        kl_bound = 4.0 * ps.n * pset.kappa**2 / (10.0 * ps.a**2) * (pset.l / spec.m) ** 2
        for pair in report.pairs:
            assert pair.separation >= sep_bound * (1 - 1e-12), (
                f"r={r} pair ({pair.i},{pair.j}): separation {pair.separation:g} < {sep_bound:g}"
            )
            assert pair.kl_exact <= kl_bound * (1 + 1e-12), (
                f"r={r} pair ({pair.i},{pair.j}): KL {pair.kl_exact:g} > {kl_bound:g}"
            )
        pairs_checked += len(report.pairs)
        observed_ranks[r] = sorted(set(report.ranks))
        rank_flags = [f for f in report.flags if "rank" in f]
        assert len(rank_flags) == len(report.flags), (
            f"r={r}: unexpected non-rank flags {[f for f in report.flags if 'rank' not in f]}"
        )
    wall = time.time() - t0
    print(
        f"[A04] entry, smoothness, separation and KL clauses hold across "
        f"{pairs_checked} pairs; observed member ranks {observed_ranks}; "
        f"wall {wall:.1f}s (budget 120s)"
    )
    exceeded = {r: ranks for r, ranks in observed_ranks.items() if max(ranks) > r}
    assert not exceeded, (
        f"rank budgets exceeded: {exceeded}.  The members are anti-diagonal "
        f"two-block matrices, whose nonzero eigenvalues come in +/- pairs, so "
        f"every nonzero member has even rank (2x the code matrix rank) and a "
        f"budget of r in {{1, 2}} is structurally unreachable; the construction "
        f"meets 2r, not r."
    )


def test_a05_convex_solver_optimality():
    """Splitting solver vs. an interior-point reference on 50 random instances,
    plus exact recovery from an exhaustive noiseless design."""
    import cvxpy as cp
    from scipy.linalg import sqrtm

    t0 = time.time()
    rng = make_rng(505)
    specs = [_spec(cycle_graph(10)), _spec(path_graph(10))]
    whalves = [np.real(sqrtm(s.operator())) for s in specs]
    noises = ["none", "uniform:0.2", "sign:0.3"]
    worst_res = worst_gap = 0.0
    for i in range(50):
        spec, wh = specs[i % 2], whalves[i % 2]
        r = int(rng.integers(1, 4))
        a_t = float(rng.uniform(0.3, 0.8))
        noise = noises[i % 3]
        level = float(noise.split(":")[1]) if ":" in noise else 0.0
        a = float(a_t + level + rng.uniform(0.05, 0.3))
        star, _ = generate_oracle(spec, r, 1e9, a_t, seed=1000 + i)
        n = int(rng.integers(40, 201))
        data = draw_dataset(star, a, noise, n, seed=2000 + i)
        eps = float(rng.uniform(0.005, 0.2))
        eps_bar = float(rng.choice([0.0, 0.3, 1.0]))
        cfg = ConvexConfig(
            epsilon=eps, epsilon_bar=eps_bar, a=a,
            max_iters=400000, rel_tol=1e-13, opt_tol=1e-8,
        )
        S_hat, rep = solve_convex(data, spec, cfg)
        res = first_order_residual(S_hat, data, spec, cfg)
        worst_res = max(worst_res, res)
        assert res <= 1e-6, f"instance {i}: first-order residual {res:g} > 1e-6"

        Sv = cp.Variable((10, 10), symmetric=True)
        resid = data.y - Sv[data.u, data.v]
        J = (
            cp.sum_squares(resid) / n
            + eps * cp.normNuc(Sv)
            + (eps_bar / 100.0) * cp.sum_squares(wh @ Sv)
        )
        prob = cp.Problem(cp.Minimize(J), [cp.abs(Sv) <= a])
        prob.solve(solver=cp.CLARABEL)
        gap = abs(rep.objective - prob.value)
        worst_gap = max(worst_gap, gap)
        assert gap <= 1e-8, f"instance {i}: objective gap {gap:g} > 1e-8 vs reference"

    # exhaustive noiseless design: every ordered pair observed once, no penalty
    spec8 = _spec(path_graph(8))
    star8, _ = generate_oracle(spec8, 2, 1e9, 0.8, seed=512)
    uu, vv = np.meshgrid(np.arange(8), np.arange(8), indexing="ij")
    from randkit.sampling import Dataset

    full = Dataset(uu.ravel(), vv.ravel(), star8.entries[uu.ravel(), vv.ravel()], 8, 1.0)
    cfg0 = ConvexConfig(
        epsilon=0.0, epsilon_bar=0.0, a=1.0,
        max_iters=200000, rel_tol=1e-14, opt_tol=1e-10,
    )
    S_full, _ = solve_convex(full, spec8, cfg0)
    recovery = _sq_err(S_full, star8)
    assert recovery <= 1e-10, f"exhaustive noiseless recovery error {recovery:g} > 1e-10"
    wall = time.time() - t0
    print(
        f"[A05] 50 instances: worst first-order residual {worst_res:.2e} (<= 1e-6), "
        f"worst reference gap {worst_gap:.2e} (<= 1e-8); exhaustive noiseless "
        f"recovery {recovery:.2e} (<= 1e-10); wall {wall:.1f}s"
    )


def _exact_scale_min(g, y, a, radius):
    """Exact min over s in [-radius, radius] of mean((y - clip(s g, -a, a))^2).

    The loss is piecewise quadratic in s with breakpoints where an entry hits
    the clamp, so the global minimum is found by minimizing each quadratic
    piece in closed form.
    """
    n = y.size
    pts = {-radius, 0.0, radius}
    nz = np.abs(g) > 1e-300
    for b in np.concatenate([a / g[nz], -a / g[nz]]):
        if -radius < b < radius:
            pts.add(float(b))
    pts = np.array(sorted(pts))
    best = np.inf
    for lo, hi in zip(pts[:-1], pts[1:]):
        mid = 0.5 * (lo + hi)
        vals = mid * g
        low, high = vals < -a, vals > a
        free = ~(low | high)
        gf, yf = g[free], y[free]
        A = float(gf @ gf) / n
        B = -2.0 * float(yf @ gf) / n
        C = (
            float(yf @ yf)
            + float(np.sum((y[low] + a) ** 2))
            + float(np.sum((y[high] - a) ** 2))
        ) / n
        cands = [lo, hi]
        if A > 0 and lo < -B / (2 * A) < hi:
            cands.append(-B / (2 * A))
        for s in cands:
            best = min(best, A * s * s + B * s + C)
    return best


def _tiny_grid_oracle(data, spec, l, a):
    """Global minimum of the rank-1 restricted loss by direction search.

    Rank-1 coefficients factor as sigma w w^T with |sigma| <= a m and w a
    unit vector, so for l=1 the problem is one exact scale minimization and
    for l=2 a scan over directions w(theta) with the scale solved exactly at
    each theta (coarse grid, then two refinement passes).
    """
    radius = a * spec.m
    phi = spec.eigenvectors[:, :l]
    if l == 1:
        g = phi[data.u, 0] * phi[data.v, 0]
        return _exact_scale_min(g, data.y, a, radius)

    def at(theta):
        w = np.cos(theta) * phi[:, 0] + np.sin(theta) * phi[:, 1]
        g = w[data.u] * w[data.v]
        return _exact_scale_min(g, data.y, a, radius)

    lo, hi, npts = 0.0, np.pi, 2001
    best_theta, best_val = 0.0, np.inf
    for _ in range(3):
        thetas = np.linspace(lo, hi, npts)
        vals = np.array([at(t) for t in thetas])
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val, best_theta = float(vals[k]), float(thetas[k])
        step = thetas[1] - thetas[0]
        lo, hi, npts = best_theta - 2 * step, best_theta + 2 * step, 1201
    return best_val


def test_a06_restricted_ls_matches_grid_oracle():
    """Projected-gradient restricted fit vs. the exact direction-search oracle
    on every tiny instance (m <= 4, l <= 2, rank 1, three noise kinds)."""
    t0 = time.time()
    worst = 0.0
    instances = 0
    for m in (2, 3, 4):
        spec = _spec(path_graph(m))
        for l in (1, 2):
            for j, noise in enumerate(["none", "uniform:0.3", "sign:0.25"]):
                seed = 100 * m + 10 * l + j
                star, _ = generate_oracle(spec, 1, 1e9, 0.9, seed=seed)
                data = draw_dataset(star, 2.0, noise, 48, seed=seed + 1)
                cfg = RestrictedConfig(
                    r=1, l=l, a=2.0, restarts=40, max_iters=5000, tol=1e-14, seed=seed
                )
                _, achieved = restricted_ls(data, spec, cfg)
                oracle = _tiny_grid_oracle(data, spec, l, 2.0)
                diff = abs(achieved - oracle)
                worst = max(worst, diff)
                instances += 1
                assert diff <= 1e-6, (
                    f"m={m} l={l} {noise}: achieved {achieved!r} vs oracle {oracle!r} "
                    f"differ by {diff:g} > 1e-6"
                )
    wall = time.time() - t0
    print(
        f"[A06] {instances}/18 tiny instances within 1e-6 of the exact oracle "
        f"(worst gap {worst:.2e}); wall {wall:.1f}s"
    )


def test_a07_error_rate_scaling(circle200):
    """Aggregated convex estimator on the circle testbed: fitted error-vs-n
    slope lands in the [-0.82, -0.52] window around the -2/3 target, and the
    mean error curve stays under the theoretical envelope calibrated at the
    smallest n."""
    _, _, rho_cfg, _ = circle200
    cfg = ExperimentConfig(
        graph_source="circle:200",
        graph_weight=63.0,
        q=1.0,
        r=1,
        rho=rho_cfg,
        a=1.0,
        n_grid=[500, 1000, 2000, 4000, 8000, 16000, 32000],
        replicates=10,
        noise="uniform:0.2",
        estimator="aggregate",
        estimator_options={
            "eps": "auto", "big_d": 0.035, "rel_tol": 1e-9, "opt_tol": 1e-5,
        },
        seed=42,
    )
    t0 = time.time()
    report = run_experiment(cfg)
    wall = time.time() - t0
    assert not report.failures, f"replicates failed: {report.failures}"

    means = report.mean_errors()
    envelope = {row.n: row.Delta_n for row in report.envelope}
    C = means[500] / envelope[500]
    violations = [n for n in cfg.n_grid if means[n] > C * envelope[n] * (1 + 1e-9)]
    print(
        f"[A07] slope {report.slope:.4f} (window [-0.82, -0.52], target -2/3), "
        f"stderr {report.slope_stderr:.4f}, median-based slope {report.median_slope:.4f}, "
        f"envelope constant C = {C:.4f}, dominance violations {violations}; "
        f"wall {wall / 60:.1f} min on one core (desktop budget 30 min)"
    )
    assert -0.82 <= report.slope <= -0.52, (
        f"fitted slope {report.slope:.4f} outside [-0.82, -0.52]"
    )
    assert not violations, f"mean error rises above C * Delta_n at n in {violations}"


def test_a08_noise_operator_bound():
    """Monte Carlo mean operator norm of both sampling-noise matrices stays
    below the critical level (200 replicates, m=50, n=2000)."""
    t0 = time.time()
    m, n, reps = 50, 2000, 200
    spec = _spec(cycle_graph(m))
    star, _ = generate_oracle(spec, 2, 1e9, 0.6, seed=88)
    bound = epsilon_star(n, m, 1.0)
    rng = make_rng(808)
    residual_norms = []
    sign_norms = []
    for k in range(reps):
        data = draw_dataset(star, 1.0, "uniform:0.4", n, seed=5000 + k)
        resid = data.y - star.entries[data.u, data.v]
        Z = np.zeros((m, m))
        np.add.at(Z, (data.u, data.v), 0.5 * resid)
        np.add.at(Z, (data.v, data.u), 0.5 * resid)
        residual_norms.append(np.linalg.norm(Z / n, 2))

        u = rng.integers(0, m, size=n)
        v = rng.integers(0, m, size=n)
        xi = rng.choice([-1.0, 1.0], size=n)
        Z2 = np.zeros((m, m))
        np.add.at(Z2, (u, v), 0.5 * xi)
        np.add.at(Z2, (v, u), 0.5 * xi)
        sign_norms.append(np.linalg.norm(Z2 / n, 2))
    mean_res, mean_sign = float(np.mean(residual_norms)), float(np.mean(sign_norms))
    wall = time.time() - t0
    print(
        f"[A08] mean operator norms over {reps} replicates: residual-weighted "
        f"{mean_res:.5f}, sign-weighted {mean_sign:.5f}, critical level "
        f"{bound:.5f}; wall {wall:.1f}s"
    )
    assert mean_res <= bound, f"residual-weighted mean norm {mean_res:g} > {bound:g}"
    assert mean_sign <= bound, f"sign-weighted mean norm {mean_sign:g} > {bound:g}"


def test_a09_characterization_identities():
    """Closed-form cutoff and crossover equal independent grid scans on 200
    random monotone spectra: exact integers, values to 1e-12."""
    rng = make_rng(909)
    for i in range(200):
        m = int(rng.integers(5, 81))
        style = i % 4
        if style == 0:
            lam = np.sort(rng.uniform(0.01, 50.0, size=m))
        elif style == 1:
            lam = np.sort(rng.uniform(0.05, 20.0, size=m))
            lam[: int(rng.integers(1, min(4, m)))] = 0.0
        elif style == 2:
            lam = np.sort(np.round(rng.uniform(0.5, 8.0, size=m), 1))  # ties
        else:
            lam = np.arange(1, m + 1, dtype=float) ** float(rng.uniform(0.5, 2.5))
        lam = lam * 10.0 ** float(rng.uniform(-2, 2))
        spec = SpectralDecomposition(lam, np.eye(m))
        n = int(rng.integers(50, 10**6))
        r = int(rng.integers(1, m + 1))
        a = float(rng.uniform(0.2, 3.0))
        rho = 0.0 if i % 17 == 0 else float(rng.uniform(0.05, 10.0))
        ps = ProblemSize(n=n, m=m, r=r, rho=rho, a=a)

        cut = bias_variance_cutoff(ps, spec, p=2.0, q_p=1.0)
        lo = min(spec.k0, 32)
        ls = np.arange(lo, m + 1)
        f = a**2 * np.minimum(r, ls) * ls / n
        lam_g = lam[ls - 1]
        g = np.empty(len(ls))
        pos = lam_g > 0
        g[pos] = rho**2 / lam_g[pos]
        g[~pos] = np.inf if rho > 0 else 0.0
        brute_value = float(np.max(np.minimum(f, g)))
        cond = f <= g
        brute_cut = int(ls[np.nonzero(cond)[0][-1]]) if cond.any() else lo - 1
        assert cut.cutoff_l == brute_cut, (
            f"spectrum {i}: cutoff {cut.cutoff_l} != grid scan {brute_cut}"
        )
        np.testing.assert_allclose(cut.grid_value, brute_value, rtol=1e-12)
        np.testing.assert_allclose(cut.value, brute_value, rtol=1e-12)

        ada = adaptive_upper_rate(ps, spec, A_const=1.0)
        ls2 = np.arange(1, m + 1)
        x = np.minimum(r, ls2) * ls2
        pen = a**2 * x / n * np.log(n * m / x)
        lam_next = np.append(lam[1:], np.inf)
        bias = np.empty(m)
        pos2 = lam_next > 0
        bias[pos2] = rho**2 / lam_next[pos2]
        bias[~pos2] = np.inf if rho > 0 else 0.0
        bias[np.isinf(lam_next)] = 0.0
        brute_value2 = float(np.min(np.maximum(pen, bias)))
        cond2 = pen >= bias
        brute_cross = int(ls2[np.nonzero(cond2)[0][0]]) if cond2.any() else m + 1
        assert ada.crossover_l == brute_cross, (
            f"spectrum {i}: crossover {ada.crossover_l} != grid scan {brute_cross}"
        )
        np.testing.assert_allclose(ada.value, brute_value2, rtol=1e-12)
        if ada.characterization_ok:
            np.testing.assert_allclose(ada.char_value, brute_value2, rtol=1e-12)
    print(
        "[A09] 200 random monotone spectra: cutoff and crossover integers match "
        "the grid scans exactly, values to 1e-12"
    )


def test_a10_aggregation_dominance(circle200):
    """At n=8000 on the circle testbed, the validated aggregate is within
    0.05 * signal of the best grid fit in at least 18 of 20 replicates."""
    spec, star, _, s0 = circle200
    n, reps = 8000, 20
    eps = default_epsilon(n, spec.m, 1.0, big_d=0.035)
    base = ConvexConfig(
        epsilon=eps, epsilon_bar=0.0, a=1.0,
        max_iters=50000, rel_tol=1e-9, opt_tol=1e-5,
    )
    t0 = time.time()
    hits = 0
    worst_excess = -np.inf
    for k in range(reps):
        data = draw_dataset(star, 1.0, "uniform:0.2", n, seed=9000 + k)
        path = aggregate_path(data, spec, base)
        errs = np.array([_sq_err(K, star) for K in path.fits])
        agg_err = errs[path.ls.index(path.chosen_l)]
        excess = (agg_err - errs.min()) / s0
        worst_excess = max(worst_excess, excess)
        hits += excess <= 0.05
    wall = time.time() - t0
    print(
        f"[A10] {hits}/{reps} replicates with aggregate within 0.05 * signal of "
        f"the grid-best (worst excess {worst_excess:.4f}); wall {wall / 60:.1f} min"
    )
    assert hits >= 18, f"aggregate matched the grid-best in only {hits}/{reps} replicates"
