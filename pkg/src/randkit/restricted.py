"""Rank- and eigenbasis-restricted least squares, with model selection.

The class at cut ``l`` and rank budget ``r`` consists of truncations
``T^a`` (entrywise clamp to ``[-a, a]``) of kernels ``T`` supported on
the first ``l`` smoothing eigenvectors with ``rank(T) <= r ^ l`` and
``|T|_F <= a m``.  The estimator minimizes the empirical loss of ``T^a``
by projected gradient on the ``l x l`` coefficient matrix:

* loss gradient through the clamp uses the interior derivative at the
  boundary (the clamp is differentiable a.e.),
* the projection hard-thresholds eigenvalues to the rank cap and then
  rescales into the Frobenius ball — in that order the composition is
  the exact projection onto the intersection,
* several restarts fight nonconvexity: one start projects the per-cell
  response means into the class, the rest are random.

Model selection refits on a grid of ``(r, l)`` and charges
``K a^2 (r^l) l / n * log(A n m / ((r^l) l))`` per candidate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from randkit.kernels import SymmetricKernel
from randkit.rng import make_rng
from randkit.sampling import Dataset
from randkit.spectra import SpectralDecomposition

__all__ = [
    "RestrictedConfig",
    "SelectionConfig",
    "restricted_ls",
    "select_model",
    "selection_penalty",
    "restricted_risk_bound",
]


@dataclass
class RestrictedConfig:
    r: int
    l: int
    a: float
    restarts: int = 8
    max_iters: int = 500
    tol: float = 1e-12
    seed: int = 0

    def validate(self, m: int) -> None:
        if not 1 <= self.r <= m:
            raise ValueError(f"rank budget must lie in [1, {m}], got {self.r}")
        if not 1 <= self.l <= m:
            raise ValueError(f"basis cut must lie in [1, {m}], got {self.l}")
        if self.a <= 0:
            raise ValueError(f"bound must be positive, got {self.a}")
        if self.restarts < 1:
            raise ValueError("need at least one restart")


@dataclass
class SelectionConfig:
    a: float
    grid: list[tuple[int, int]]
    K: float = 1.0
    A: float = 1.0
    restarts: int = 8
    max_iters: int = 500
    tol: float = 1e-12
    seed: int = 0

    def __post_init__(self) -> None:
        if self.K <= 0 or self.A <= 0:
            raise ValueError("penalty constants must be positive")
        if not self.grid:
            raise ValueError("selection grid must be nonempty")


def _project_class(C: np.ndarray, rank_cap: int, radius: float) -> np.ndarray:
    """Exact projection onto {rank <= cap, |C|_F <= radius} (symmetric)."""
    w, V = np.linalg.eigh(0.5 * (C + C.T))
    if rank_cap < len(w):
        order = np.argsort(np.abs(w))[::-1]
        drop = order[rank_cap:]
        w[drop] = 0.0
    nrm = float(np.sqrt(np.sum(w * w)))
    if nrm > radius:
        w *= radius / nrm
    return (V * w) @ V.T


class _LossInBasis:
    """Empirical loss of the clamped kernel as a function of coefficients."""

    def __init__(self, data: Dataset, spec: SpectralDecomposition, l: int, a: float):
        phi = spec.eigenvectors[:, :l]
        self.P = phi[data.u]
        self.Q = phi[data.v]
        self.y = data.y
        self.n = data.n
        self.a = a

    def values(self, C: np.ndarray) -> np.ndarray:
        return np.einsum("ja,ab,jb->j", self.P, C, self.Q, optimize=True)

    def loss(self, C: np.ndarray) -> float:
        res = self.y - np.clip(self.values(C), -self.a, self.a)
        return float(res @ res) / self.n

    def loss_and_grad(self, C: np.ndarray) -> tuple[float, np.ndarray]:
        s = self.values(C)
        clipped = np.clip(s, -self.a, self.a)
        res = self.y - clipped
        w = np.where(np.abs(s) <= self.a, -2.0 * res / self.n, 0.0)
        G = self.P.T @ (w[:, None] * self.Q)
        return float(res @ res) / self.n, 0.5 * (G + G.T)


def _data_driven_start(data: Dataset, spec: SpectralDecomposition, l: int) -> np.ndarray:
    m = spec.m
    N = np.zeros((m, m))
    B = np.zeros((m, m))
    np.add.at(N, (data.u, data.v), 1.0)
    np.add.at(B, (data.u, data.v), data.y)
    nsym = N + N.T
    with np.errstate(invalid="ignore"):
        means = np.where(nsym > 0, (B + B.T) / np.where(nsym > 0, nsym, 1.0), 0.0)
    phi = spec.eigenvectors[:, :l]
    return phi.T @ means @ phi


def restricted_ls(
    data: Dataset,
    spec: SpectralDecomposition,
    cfg: RestrictedConfig,
    with_coefficients: bool = False,
):
    """Best-of-restarts projected-gradient fit of the restricted class.

    Returns ``(kernel, achieved_loss)`` where the kernel is the clamped
    ``T^a`` and the loss is exactly its empirical loss.  With
    ``with_coefficients=True`` a third element carries the unclamped
    kernel ``T`` (for feasibility inspection).
    """
    m = spec.m
    cfg.validate(m)
    l, a = cfg.l, cfg.a
    cap = min(cfg.r, l)
    radius = a * m
    fn = _LossInBasis(data, spec, l, a)
    rng = make_rng(cfg.seed, 7)

    best_loss = np.inf
    best_C = np.zeros((l, l))
    for start in range(cfg.restarts):
        if start == 0:
            C = _project_class(_data_driven_start(data, spec, l), cap, radius)
        else:
            raw = rng.standard_normal((l, l))
            C = _project_class(0.5 * (raw + raw.T) * a, cap, radius)
        loss, G = fn.loss_and_grad(C)
        step = 1.0
        stall = 0
        for _ in range(cfg.max_iters):
            moved = False
            while step > 1e-18:
                C_new = _project_class(C - step * G, cap, radius)
                loss_new = fn.loss(C_new)
                if loss_new < loss - 1e-12 * max(1.0, loss):
                    moved = True
                    break
                step *= 0.5
            if not moved:
                break
            if loss - loss_new <= cfg.tol * max(1.0, loss):
                stall += 1
            else:
                stall = 0
            C, loss = C_new, loss_new
            _, G = fn.loss_and_grad(C)
            step *= 2.0
            if stall >= 5:
                break
        if loss < best_loss:
            best_loss, best_C = loss, C

    phi = spec.eigenvectors[:, :l]
    T = phi @ best_C @ phi.T
    T = 0.5 * (T + T.T)
    kernel = SymmetricKernel(np.clip(T, -a, a))
    res = data.y - kernel.entries[data.u, data.v]
    achieved = float(res @ res) / data.n
    if with_coefficients:
        return kernel, achieved, SymmetricKernel(T)
    return kernel, achieved


def selection_penalty(K: float, A: float, a: float, r: int, l: int, n: int, m: int) -> float:
    """Complexity charge ``K a^2 (r^l) l / n * log(A n m / ((r^l) l))``."""
    x = min(r, l) * l
    return K * a**2 * x / n * float(np.log(A * n * m / x))


def select_model(
    data: Dataset, spec: SpectralDecomposition, cfg: SelectionConfig
) -> tuple[int, int, SymmetricKernel]:
    """Penalized grid selection over ``(r, l)`` candidates.

    Candidates sharing ``(r ^ l, l)`` define the same class and penalty,
    so the grid is deduplicated on that key (keeping the smallest
    representative).  Ties in the penalized score go to the
    lexicographically smallest ``(l, r ^ l)``.
    """
    m = spec.m
    classes: dict[tuple[int, int], tuple[int, int]] = {}
    for r, l in cfg.grid:
        if not (1 <= r <= m and 1 <= l <= m):
            raise ValueError(f"grid entry ({r}, {l}) out of range for m = {m}")
        key = (min(r, l), l)
        rep = (min(r, key[0]), l)
        if key not in classes or rep < classes[key]:
            classes[key] = rep

    scored = []
    for (re, l), (r_rep, _) in sorted(classes.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        sub = RestrictedConfig(
            r=re,
            l=l,
            a=cfg.a,
            restarts=cfg.restarts,
            max_iters=cfg.max_iters,
            tol=cfg.tol,
            seed=cfg.seed,
        )
        kernel, loss = restricted_ls(data, spec, sub)
        pen = selection_penalty(cfg.K, cfg.A, cfg.a, re, l, data.n, m)
        scored.append((loss + pen, l, re, r_rep, kernel))
    scored.sort(key=lambda item: (item[0], item[1], item[2]))
    _, l_hat, _, r_hat, kernel = scored[0]
    return r_hat, l_hat, kernel


def restricted_risk_bound(
    r: int,
    l: int,
    rho: float,
    a: float,
    n: int,
    spec: SpectralDecomposition,
    A_const: float = 1.0,
) -> tuple[float, float]:
    """Risk rate of the restricted fit and the clamp-free trivial bound.

    Returns ``(a^2 (r^l) l / n * log(A n m/((r^l) l)) | rho^2/lambda_{l+1},
    4 a^2 l^2/m^2 + 2 rho^2/lambda_{l+1})`` with ``lambda_{m+1} = +inf``.
    """
    m = spec.m
    if not 1 <= l <= m:
        raise ValueError(f"l must lie in [1, {m}], got {l}")
    x = min(r, l) * l
    main = a**2 * x / n * float(np.log(A_const * n * m / x))
    lam_next = spec.lambda_at(l + 1)
    if lam_next > 0:
        bias = rho**2 / lam_next if np.isfinite(lam_next) else 0.0
    else:
        bias = np.inf if rho > 0 else 0.0
    return max(main, bias), 4.0 * a**2 * l**2 / m**2 + 2.0 * bias
