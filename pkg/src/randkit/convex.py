"""Two-penalty convex estimation of a bounded symmetric kernel.

The estimator minimizes

    J(S) = n^{-1} sum_j (y_j - S(u_j, v_j))^2
           + epsilon |S|_nuclear
           + (epsilon_bar / m^2) tr(W S^2)

over the box ``|S|_inf <= a``, where ``W`` is the graph smoothing
operator.  Both nonsmooth pieces have exact proximal maps — entrywise
clamping for the box, eigenvalue soft-thresholding for the nuclear norm —
so the program is solved by three-operator (Davis-Yin) splitting with the
smooth part being the data fit plus the Sobolev quadratic.

Grouping duplicate pairs makes one iteration cost ``O(m^2)`` plus one
symmetric eigendecomposition, independent of ``n``: with ordered-pair
count and response-sum tables ``N`` and ``B``,

    grad fit(S) = ((N + N^T) * S - (B + B^T)) / n.

The Sobolev gradient is the symmetrized ``(epsilon_bar/m^2)(WS + SW)``,
which agrees with ``2 (epsilon_bar/m^2) W S`` as a linear functional on
symmetric matrices by trace cyclicity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from randkit.kernels import SymmetricKernel, coherence_majorant, sign_and_support
from randkit.sampling import Dataset
from randkit.spectra import SpectralDecomposition, SpectralMajorant

__all__ = [
    "ConvexConfig",
    "SolveReport",
    "solve_convex",
    "objective",
    "first_order_residual",
    "convex_oracle_bound",
    "tail_exponent",
    "aggregate_epsbar",
    "aggregate_path",
    "AggregatePath",
]


@dataclass
class ConvexConfig:
    """Penalty weights, box radius and solver tolerances."""

    epsilon: float
    epsilon_bar: float
    a: float
    max_iters: int = 50000
    rel_tol: float = 1e-10
    opt_tol: float = 1e-7

    def __post_init__(self) -> None:
        if self.epsilon < 0 or self.epsilon_bar < 0:
            raise ValueError("penalty weights must be nonnegative")
        if self.a <= 0:
            raise ValueError(f"box radius must be positive, got {self.a}")
        if self.rel_tol <= 0 or self.opt_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass
class SolveReport:
    iterations: int
    converged: bool
    objective: float
    residual: float
    objective_trace: np.ndarray = field(repr=False)
    step: float = 0.0
    # final splitting state; passing it to the next solve of a nearby
    # problem (see aggregate_path) resumes with the dual offset intact
    state: np.ndarray | None = field(default=None, repr=False)


class _Objective:
    """Sufficient statistics of J and its smooth part."""

    def __init__(self, data: Dataset, spec: SpectralDecomposition, cfg: ConvexConfig):
        m = data.m
        if spec.m != m:
            raise ValueError(f"dataset has m={m} but spectrum has m={spec.m}")
        if not np.isfinite(data.y).all():
            raise ValueError("dataset responses contain NaN or inf")
        N = np.zeros((m, m))
        B = np.zeros((m, m))
        np.add.at(N, (data.u, data.v), 1.0)
        np.add.at(B, (data.u, data.v), data.y)
        self.nsym = N + N.T
        self.bsym = B + B.T
        self.n = data.n
        self.m = m
        self.y_sq_mean = float(data.y @ data.y) / data.n
        self.max_dup = float(N.max())
        self.cfg = cfg
        self.W = spec.operator() if cfg.epsilon_bar > 0 else None
        self.lam_max = float(spec.eigenvalues[-1])

    # -- smooth part ------------------------------------------------------
    def fit_loss(self, S: np.ndarray) -> float:
        quad = float(np.vdot(self.nsym, S * S))
        lin = float(np.vdot(self.bsym, S))
        return self.y_sq_mean - lin / self.n + 0.5 * quad / self.n

    def smooth_grad(self, S: np.ndarray) -> np.ndarray:
        g = (self.nsym * S - self.bsym) / self.n
        if self.W is not None:
            WS = self.W @ S
            g = g + (self.cfg.epsilon_bar / self.m**2) * (WS + WS.T)
        return g

    def sobolev_pen(self, S: np.ndarray) -> float:
        if self.W is None:
            return 0.0
        return self.cfg.epsilon_bar / self.m**2 * float(np.vdot(self.W @ S, S))

    def value(self, S: np.ndarray, nuclear: float | None = None) -> float:
        if nuclear is None:
            nuclear = float(np.abs(np.linalg.eigvalsh(S)).sum())
        return self.fit_loss(S) + self.cfg.epsilon * nuclear + self.sobolev_pen(S)

    def initial_step(self) -> float:
        # safe Lipschitz surrogate: duplicates bound the data-fit curvature,
        # lambda_max the Sobolev curvature
        lip = 2.0 * self.max_dup / self.n + 2.0 * self.cfg.epsilon_bar * self.lam_max / self.m**2
        return 1.0 / lip if lip > 0 else 1.0


def _soft_threshold_sym(X: np.ndarray, t: float) -> tuple[np.ndarray, float]:
    """Eigenvalue soft-thresholding; returns the prox and its nuclear norm."""
    if t <= 0:
        return X, float(np.abs(np.linalg.eigvalsh(X)).sum())
    w, V = np.linalg.eigh(X)
    w_thr = np.sign(w) * np.maximum(np.abs(w) - t, 0.0)
    out = (V * w_thr) @ V.T
    return 0.5 * (out + out.T), float(np.abs(w_thr).sum())


def objective(kernel: SymmetricKernel, data: Dataset, spec: SpectralDecomposition, cfg: ConvexConfig) -> float:
    """Value of the penalized objective at a kernel."""
    return _Objective(data, spec, cfg).value(kernel.entries)


def solve_convex(
    data: Dataset,
    spec: SpectralDecomposition,
    cfg: ConvexConfig,
    init: SymmetricKernel | None = None,
    init_state: np.ndarray | None = None,
) -> tuple[SymmetricKernel, SolveReport]:
    """Minimize the two-penalty objective over the entrywise box.

    Returns the clamped (hence exactly feasible) solution and a report
    whose ``residual`` is the independently constructed normal-cone
    certificate of :func:`first_order_residual`.  The solve stops once the
    relative objective change stays below ``rel_tol`` for 10 consecutive
    iterations and that certificate drops below ``opt_tol``; if
    ``max_iters`` is exhausted first the report has ``converged=False``.
    """
    obj = _Objective(data, spec, cfg)
    m = obj.m
    a = cfg.a
    tau = obj.initial_step()

    if init_state is not None:
        z = init_state.copy()
    elif init is not None:
        z = np.clip(init.entries.copy(), -a, a)
    else:
        z = np.zeros((m, m))
    trace: list[float] = []
    best = np.inf
    consec = 0
    converged = False
    iterations = 0
    cert = np.inf
    check_period = 25

    while iterations < cfg.max_iters:
        iterations += 1
        xg = np.clip(z, -a, a)
        g = obj.smooth_grad(xg)
        inner = 2.0 * xg - z - tau * g
        if cfg.epsilon > 0:
            xh, nuc = _soft_threshold_sym(inner, tau * cfg.epsilon)
        else:
            xh, nuc = inner, 0.0
        z += xh - xg

        J = obj.fit_loss(xh) + cfg.epsilon * nuc + obj.sobolev_pen(xh)
        if not np.isfinite(J) or J > best + 10.0 * (1.0 + abs(best)):
            # divergence guard: halve the step and pull the state back into the box
            tau *= 0.5
            z = np.clip(z, -a, a)
            consec = 0
            continue
        prev = trace[-1] if trace else np.inf
        best = min(best, J)
        trace.append(best)
        if abs(J - prev) <= cfg.rel_tol * max(1.0, abs(J)):
            consec += 1
        else:
            consec = 0
        dys_res = float(np.linalg.norm(xh - xg)) / tau
        if consec >= 10 and dys_res <= cfg.opt_tol and (
            iterations % check_period == 0 or dys_res <= 0.01 * cfg.opt_tol
        ):
            S_cur = SymmetricKernel(np.clip(z, -a, a))
            cert = first_order_residual(S_cur, data, spec, cfg)
            if cert <= cfg.opt_tol:
                converged = True
                break
            consec = 0  # certificate not there yet; keep iterating a while

    S_hat = SymmetricKernel(np.clip(z, -a, a))
    if not converged:
        cert = first_order_residual(S_hat, data, spec, cfg)
        if cert <= cfg.opt_tol:
            converged = True
    final_J = obj.value(S_hat.entries)
    trace.append(min(best, final_J))
    report = SolveReport(
        iterations=iterations,
        converged=converged,
        objective=final_J,
        residual=cert,
        objective_trace=np.minimum.accumulate(np.asarray(trace)),
        step=tau,
        state=z,
    )
    return S_hat, report


def first_order_residual(
    kernel: SymmetricKernel,
    data: Dataset,
    spec: SpectralDecomposition,
    cfg: ConvexConfig,
    sweeps: int = 30,
) -> float:
    """Normal-cone optimality residual at a feasible point.

    Searches for a nuclear-norm subgradient ``V = sign(S) + P_perp M
    P_perp`` (``|M|_op <= 1``) and a box normal-cone element ``N`` making
    ``grad + epsilon V + N`` small, alternating exact minimization in
    ``M`` (eigenvalue clipping of the orthocomplement block) and in ``N``
    (entrywise clipping at active box faces).  The returned Frobenius norm
    certifies ``J(S') >= J(S) - residual * |S' - S|_F`` for every feasible
    ``S'``; it vanishes exactly at a minimizer.
    """
    obj = _Objective(data, spec, cfg)
    S = kernel.entries
    a = cfg.a
    G = obj.smooth_grad(S)
    upper = S >= a * (1.0 - 1e-12)
    lower = S <= -a * (1.0 - 1e-12)

    def reduce_box(A: np.ndarray) -> np.ndarray:
        R = A.copy()
        R[upper] = np.maximum(A[upper], 0.0)
        R[lower] = np.minimum(A[lower], 0.0)
        return R

    if cfg.epsilon == 0:
        return float(np.linalg.norm(reduce_box(G)))

    sgn, proj, _ = sign_and_support(kernel)
    P_perp = np.eye(obj.m) - proj
    A0 = G + cfg.epsilon * sgn
    Nmat = np.zeros_like(A0)
    best = np.inf
    for _ in range(max(1, sweeps)):
        # exact minimization over |M|_op <= 1 of |A0 + N + eps P M P|_F
        block = P_perp @ (A0 + Nmat) @ P_perp
        w, V = np.linalg.eigh(0.5 * (block + block.T))
        M = (V * np.clip(-w / cfg.epsilon, -1.0, 1.0)) @ V.T
        A = A0 + cfg.epsilon * (P_perp @ M @ P_perp)
        # exact minimization over the box normal cone
        R = reduce_box(A)
        Nmat = R - A
        res = float(np.linalg.norm(R))
        if res >= best - 1e-15:
            best = min(best, res)
            break
        best = res
    return best


def tail_exponent(t: float, n: int, lam_max: float, lambda_tilde: float) -> float:
    """Confidence exponent adjusted for the smoothing-grid union bound."""
    if lambda_tilde <= 0:
        raise ValueError("lambda_tilde must be positive")
    return t + 3.0 * np.log(2.0 * np.log2(n) + 0.5 * np.log2(lam_max / lambda_tilde) + 2.0)


def convex_oracle_bound(
    kernel: SymmetricKernel,
    S_star: SymmetricKernel,
    spec: SpectralDecomposition,
    majorant: SpectralMajorant,
    epsilon: float,
    epsilon_bar: float,
    *,
    n: int,
    a: float,
    t: float,
    lambda_tilde: float,
    C: float = 1.0,
) -> float:
    """Risk bound certified for the convex estimator at a given oracle kernel.

    Sums the approximation error, the coherence term
    ``C m^2 epsilon^2 phibar(S; 1/epsilon_bar)`` (with the convention that
    ``epsilon_bar = 0`` replaces the coherence envelope by ``rank(S)``),
    the Sobolev term and the ``C a^2 t_{n,m} / n`` tail.
    """
    m = spec.m
    if spec.k0 > m:
        raise ValueError("smoothing operator has no positive eigenvalues")
    lam_k0 = spec.lambda_at(spec.k0)
    if not 0.0 < lambda_tilde <= lam_k0 * (1 + 1e-12):
        raise ValueError(f"lambda_tilde must lie in (0, {lam_k0:g}], got {lambda_tilde}")
    if epsilon_bar < 0 or epsilon_bar > 1.0 / lambda_tilde * (1 + 1e-12):
        raise ValueError(f"epsilon_bar must lie in [0, {1.0 / lambda_tilde:g}], got {epsilon_bar}")

    S = kernel.entries
    diff = S - S_star.entries
    err = float(np.vdot(diff, diff)) / m**2

    if not kernel.entries.any():
        coh = 0.0  # zero oracle: empty support carries no coherence mass
    elif epsilon_bar == 0:
        _, _, coh = sign_and_support(kernel)
    else:
        coh = coherence_majorant(kernel, spec, majorant, 1.0 / epsilon_bar)
    W = spec.operator()
    sob = float(np.vdot(W @ S, S)) / m**2

    lam_max = float(spec.eigenvalues[-1])
    tnm = tail_exponent(t, n, lam_max, lambda_tilde)
    return err + C * m**2 * epsilon**2 * coh + epsilon_bar * sob + C * a**2 * tnm / n


@dataclass
class AggregatePath:
    """Every grid fit of the sample-split smoothing aggregation."""

    ls: list[int]
    eps_bars: list[float]
    fits: list[SymmetricKernel]
    reports: list[SolveReport]
    val_losses: list[float]
    chosen_l: int
    n_fit: int


def aggregate_path(
    data: Dataset, spec: SpectralDecomposition, base_cfg: ConvexConfig
) -> AggregatePath:
    """Fit the smoothing-weight grid on the first half, validate on the second.

    The grid is ``epsilon_bar = 1/lambda_l`` for ``l = k0 .. m+1`` (the
    final entry is 0 since ``lambda_{m+1} = +inf``).  Repeated eigenvalues
    produce identical weights; each distinct weight is solved once, resuming
    from the previous solve's splitting state, and shared across its group.
    ``epsilon`` and the tolerances are taken from ``base_cfg`` as given.
    """
    if data.n < 4:
        raise ValueError(f"aggregation needs n >= 4, got {data.n}")
    n_fit = data.n // 2 + 1
    if n_fit >= data.n:
        raise ValueError("degenerate split: no validation samples")
    fit_data = data.subset(slice(0, n_fit))
    val_data = data.subset(slice(n_fit, data.n))

    m = spec.m
    ls = list(range(spec.k0, m + 2))
    eps_bars = [1.0 / spec.lambda_at(l) if l <= m else 0.0 for l in ls]

    fits: list[SymmetricKernel] = []
    reports: list[SolveReport] = []
    losses: list[float] = []
    state: np.ndarray | None = None
    cache_eb: float | None = None
    for eb in eps_bars:
        if cache_eb is not None and np.isclose(cache_eb, eb, rtol=1e-9, atol=0.0):
            # repeated eigenvalue (up to round-off): same weight, same fit
            fits.append(fits[-1])
            reports.append(reports[-1])
            losses.append(losses[-1])
            continue
        cfg = ConvexConfig(
            epsilon=base_cfg.epsilon,
            epsilon_bar=eb,
            a=base_cfg.a,
            max_iters=base_cfg.max_iters,
            rel_tol=base_cfg.rel_tol,
            opt_tol=base_cfg.opt_tol,
        )
        S_hat, report = solve_convex(fit_data, spec, cfg, init_state=state)
        res = val_data.y - S_hat.entries[val_data.u, val_data.v]
        fits.append(S_hat)
        reports.append(report)
        losses.append(float(res @ res) / val_data.n)
        state = report.state
        cache_eb = eb

    best = min(losses)
    chosen = ls[int(np.argmax([loss <= best for loss in losses]))]
    return AggregatePath(
        ls=ls,
        eps_bars=eps_bars,
        fits=fits,
        reports=reports,
        val_losses=losses,
        chosen_l=chosen,
        n_fit=n_fit,
    )


def aggregate_epsbar(
    data: Dataset, spec: SpectralDecomposition, base_cfg: ConvexConfig
) -> tuple[SymmetricKernel, int]:
    """Sample-split aggregation over the smoothing weight; see :func:`aggregate_path`."""
    path = aggregate_path(data, spec, base_cfg)
    idx = path.ls.index(path.chosen_l)
    return path.fits[idx], path.chosen_l
