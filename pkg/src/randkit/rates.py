"""Closed-form risk rates: minimax lower bounds and adaptive upper bounds.

All calculators are pure functions of a problem size (n, m, r, rho, a)
and a smoothing spectrum.  Conventions: ``lambda_{m+1} = +inf`` with
``rho^2/inf = 0``; a vanishing eigenvalue inside a quotient means the
smoothness constraint is vacuous there (``rho^2/0 = +inf`` for
``rho > 0``, and 0 when ``rho = 0`` since the class degenerates).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from randkit.spectra import SpectralDecomposition

__all__ = [
    "ProblemSize",
    "basis_lp_norm",
    "basis_lp_norm_partial",
    "basis_sparsity",
    "minimax_lower_dense",
    "minimax_lower_sparse",
    "BiasVarianceCutoff",
    "bias_variance_cutoff",
    "AdaptiveRate",
    "adaptive_upper_rate",
    "polynomial_spectrum_rate",
]


@dataclass(frozen=True)
class ProblemSize:
    """Sample count, vertex count and class parameters (rank, Sobolev, sup)."""

    n: int
    m: int
    r: int
    rho: float
    a: float

    def __post_init__(self) -> None:
        if self.n < 1 or self.m < 1:
            raise ValueError(f"n and m must be positive, got n={self.n}, m={self.m}")
        if not 1 <= self.r <= self.m:
            raise ValueError(f"rank budget must lie in [1, {self.m}], got {self.r}")
        if self.rho < 0 or self.a <= 0:
            raise ValueError(f"need rho >= 0 and a > 0, got rho={self.rho}, a={self.a}")


# ---------------------------------------------------------------------------
# basis coherence quantities
# ---------------------------------------------------------------------------

def basis_lp_norm(spec: SpectralDecomposition, p: float) -> float:
    """Worst ``L_p`` mass of the rescaled basis: ``max_j (m^{p/2-1} sum_v |phi_j(v)|^p)^{2/p}``."""
    if p < 2:
        raise ValueError(f"p must be at least 2, got {p}")
    m = spec.m
    s = np.abs(spec.eigenvectors) ** p
    worst = float(s.sum(axis=0).max())
    return (m ** (p / 2.0 - 1.0) * worst) ** (2.0 / p)


def basis_lp_norm_partial(spec: SpectralDecomposition, p: float, l: int) -> float:
    """``L_{p/2}`` norm of the averaged squared basis over the first ``l`` vectors.

    Always at most ``m/l`` because the full rows of an orthogonal matrix
    have unit norm.
    """
    if p < 2:
        raise ValueError(f"p must be at least 2, got {p}")
    m = spec.m
    if not 1 <= l <= m:
        raise ValueError(f"l must lie in [1, {m}], got {l}")
    g = (m / l) * (spec.eigenvectors[:, :l] ** 2).sum(axis=1)
    return float(np.mean(g ** (p / 2.0)) ** (2.0 / p))


def basis_sparsity(spec: SpectralDecomposition, tol: float = 1e-12) -> int:
    """Largest number of basis vectors supported on any single vertex."""
    return int((np.abs(spec.eigenvectors) > tol).sum(axis=1).max())


# ---------------------------------------------------------------------------
# grid term helpers
# ---------------------------------------------------------------------------

def _variance_term(ps: ProblemSize, ls: np.ndarray) -> np.ndarray:
    """a^2 (r ^ l) l / n on the grid."""
    rl = np.minimum(ps.r, ls).astype(float)
    return ps.a**2 * rl * ls / ps.n


def _bias_term(ps: ProblemSize, spec: SpectralDecomposition, ls: np.ndarray) -> np.ndarray:
    """rho^2 / lambda_l on the grid (vacuous-constraint conventions above)."""
    lam = spec.eigenvalues[ls - 1]
    out = np.empty(len(ls))
    pos = lam > 0
    out[pos] = ps.rho**2 / lam[pos]
    out[~pos] = np.inf if ps.rho > 0 else 0.0
    return out


def _grid_start(spec: SpectralDecomposition) -> int:
    return min(spec.k0, 32)


# ---------------------------------------------------------------------------
# minimax lower bounds
# ---------------------------------------------------------------------------

def minimax_lower_dense(
    ps: ProblemSize,
    spec: SpectralDecomposition,
    p: float,
    q_p: float,
    log_m_form: bool = False,
) -> float:
    """Dense-case lower rate: best over ``l`` of the three-way minimum.

    Terms: sampling ``a^2 (r^l) l / n``, smoothness ``rho^2 / lambda_l``,
    and the coherence-limited term
    ``(p-1)^{-1} Q_p^{-2} a^2 (r^l) / l * m^{-4/p}``.  With
    ``log_m_form=True`` the third term takes its ``p = log m`` form
    ``Q^{-2} a^2 (r^l) / (l log m)``.
    """
    if not log_m_form and p <= 1:
        raise ValueError(f"p must exceed 1, got {p}")
    if log_m_form and ps.m < 2:
        raise ValueError("log-m form needs m >= 2")
    lo, m = _grid_start(spec), ps.m
    if lo > m:
        return 0.0
    ls = np.arange(lo, m + 1)
    rl = np.minimum(ps.r, ls).astype(float)
    t1 = _variance_term(ps, ls)
    t2 = _bias_term(ps, spec, ls)
    if log_m_form:
        t3 = (1.0 / q_p**2) * ps.a**2 * rl / ls / np.log(ps.m)
    else:
        t3 = (1.0 / (p - 1.0)) * (1.0 / q_p**2) * ps.a**2 * rl / ls * ps.m ** (-4.0 / p)
    return float(np.max(np.minimum(np.minimum(t1, t2), t3)))


def minimax_lower_sparse(ps: ProblemSize, spec: SpectralDecomposition, d: int) -> float:
    """Sparse-basis lower rate with third term ``a^2 l^2 / (d m^2 log m)``."""
    if d < 1:
        raise ValueError(f"sparsity must be at least 1, got {d}")
    if ps.m < 2:
        raise ValueError("need m >= 2")
    lo, m = _grid_start(spec), ps.m
    if lo > m:
        return 0.0
    ls = np.arange(lo, m + 1)
    t1 = _variance_term(ps, ls)
    t2 = _bias_term(ps, spec, ls)
    t3 = ps.a**2 / (d * np.log(m)) * (ls.astype(float) / m) ** 2
    return float(np.max(np.minimum(np.minimum(t1, t2), t3)))


# ---------------------------------------------------------------------------
# the two-term cutoff identity and its packing-capped variant
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BiasVarianceCutoff:
    """Largest grid ``l`` where the sampling term stays below the smoothness term.

    ``value`` is the closed-form ``max(variance(cutoff_l),
    bias(cutoff_l + 1))`` and always equals ``grid_value``, the directly
    computed ``max_l min(variance, bias)``.  ``capped_value`` restricts
    the grid to ``l <= l_max`` (the coherence-feasible range).  When no
    grid point satisfies the cutoff condition, ``cutoff_l`` is the
    sentinel ``grid start - 1`` and the value falls back to the bias term
    at the grid start.
    """

    cutoff_l: int
    value: float
    grid_value: float
    capped_value: float
    l_max: int


def bias_variance_cutoff(
    ps: ProblemSize, spec: SpectralDecomposition, p: float, q_p: float
) -> BiasVarianceCutoff:
    """Evaluate the cutoff identity and the capped two-term lower rate.

    The cutoff condition ``(r^l) l lambda_l <= rho^2 n / a^2`` marks where
    the nondecreasing sampling term crosses the nonincreasing smoothness
    term, so the max-min over the grid collapses to a two-point formula;
    both are computed and must agree exactly.  The cap is
    ``l_max = floor(sqrt(n/(p-1)) / (Q_p m^{2/p})) ^ m``.
    """
    if p <= 1:
        raise ValueError(f"p must exceed 1, got {p}")
    lo, m = _grid_start(spec), ps.m
    if lo > m:
        return BiasVarianceCutoff(lo - 1, 0.0, 0.0, 0.0, 0)
    ls = np.arange(lo, m + 1)
    f = _variance_term(ps, ls)
    g = _bias_term(ps, spec, ls)
    grid_value = float(np.max(np.minimum(f, g)))

    cond = f <= g
    if cond.any():
        last = int(np.nonzero(cond)[0][-1])
        cutoff_l = int(ls[last])
        lam_next = spec.lambda_at(cutoff_l + 1)
        bias_next = ps.rho**2 / lam_next if lam_next > 0 else (np.inf if ps.rho > 0 else 0.0)
        value = float(max(f[last], bias_next))
    else:
        cutoff_l = lo - 1
        value = float(g[0])

    l_max = min(int(np.sqrt(ps.n / (p - 1.0)) / (q_p * ps.m ** (2.0 / p))), m)
    if l_max >= lo:
        k = l_max - lo + 1
        capped = float(np.max(np.minimum(f[:k], g[:k])))
    else:
        capped = 0.0
    return BiasVarianceCutoff(cutoff_l, value, grid_value, capped, l_max)


# ---------------------------------------------------------------------------
# adaptive upper rate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AdaptiveRate:
    """Grid minimum of ``penalty(l) | bias(l)`` and its crossover form.

    ``crossover_l`` is the first grid point where the penalized sampling
    term reaches the smoothness term; ``char_value`` is the two-point
    closed form there.  ``characterization_ok`` records whether the
    penalized term was nondecreasing on the grid (the regime in which the
    closed form provably equals ``value``); the two always agree when it
    is set.
    """

    crossover_l: int
    value: float
    char_value: float
    characterization_ok: bool


def adaptive_upper_rate(
    ps: ProblemSize, spec: SpectralDecomposition, A_const: float = 1.0
) -> AdaptiveRate:
    """Adaptive model-selection rate ``min_l [pen(l) max bias(l)]``.

    ``pen(l) = (a^2 (r^l) l / n) log(A n m / ((r^l) l))`` and
    ``bias(l) = rho^2 / lambda_{l+1}`` with ``lambda_{m+1} = +inf``.
    """
    if A_const <= 0:
        raise ValueError(f"A_const must be positive, got {A_const}")
    m = ps.m
    ls = np.arange(1, m + 1)
    x = np.minimum(ps.r, ls) * ls
    u = ps.a**2 * x / ps.n * np.log(A_const * ps.n * m / x)
    lam_next = np.append(spec.eigenvalues[1:], np.inf)
    v = np.empty(m)
    pos = lam_next > 0
    v[pos] = ps.rho**2 / lam_next[pos]
    v[~pos] = np.inf if ps.rho > 0 else 0.0
    v[np.isinf(lam_next)] = 0.0

    value = float(np.min(np.maximum(u, v)))

    cond = u >= v
    monotone = bool((np.diff(u) >= -1e-15 * np.maximum(1.0, np.abs(u[:-1]))).all())
    if cond.any():
        first = int(np.nonzero(cond)[0][0])
        crossover_l = int(ls[first])
        if first == 0:
            char = float(u[0])
        else:
            lam_cross = spec.lambda_at(crossover_l)
            bias_prev = ps.rho**2 / lam_cross if lam_cross > 0 else (np.inf if ps.rho > 0 else 0.0)
            char = float(min(u[first], bias_prev))
        ok = monotone
    else:
        crossover_l = m + 1
        char = float(np.min(v))
        ok = False
    if ok and not np.isclose(char, value, rtol=1e-12, atol=1e-300):
        raise AssertionError(
            f"crossover characterization {char!r} disagrees with grid minimum {value!r}"
        )
    return AdaptiveRate(crossover_l, value, char, ok)


# ---------------------------------------------------------------------------
# polynomially growing spectra
# ---------------------------------------------------------------------------

def polynomial_spectrum_rate(ps: ProblemSize, beta: float) -> float:
    """Lower rate for eigenvalue growth ``lambda_l ~ l^{2 beta}``.

    ``min((a^2 rho^{1/beta} r / n)^{2beta/(2beta+1)},
    (a^2 rho^{2/beta} / n)^{beta/(beta+1)}, a^2 r m / n)`` floored at
    ``a^2/n``.
    """
    if beta <= 0.5:
        raise ValueError(f"beta must exceed 1/2, got {beta}")
    a2 = ps.a**2
    t1 = (a2 * ps.rho ** (1.0 / beta) * ps.r / ps.n) ** (2.0 * beta / (2.0 * beta + 1.0))
    t2 = (a2 * ps.rho ** (2.0 / beta) / ps.n) ** (beta / (beta + 1.0))
    t3 = a2 * ps.r * ps.m / ps.n
    return float(max(min(t1, t2, t3), a2 / ps.n))
