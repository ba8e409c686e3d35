"""Symmetric kernels on a finite vertex set and their spectral algebra.

A kernel is an ``m x m`` symmetric real matrix ``S`` whose entry ``S[u, v]``
is the value attached to the vertex pair ``(u, v)``.  Norms are reported
both in matrix scaling and in the averaged scaling induced by the uniform
measure on vertices, where ``|S|_{L2}^2 = m^{-2} |S|_F^2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from randkit.spectra import SpectralDecomposition, SpectralMajorant

__all__ = [
    "SymmetricKernel",
    "kernel_norms",
    "truncate",
    "sign_and_support",
    "eigenbasis_truncation",
    "coherence_function",
    "coherence_majorant",
    "save_kernel",
    "load_kernel",
]

#: relative symmetry tolerance for kernel entries
SYMMETRY_TOL = 1e-12

#: relative (to operator norm) cutoff below which an eigenvalue counts as zero
RANK_TOL = 1e-9


@dataclass
class SymmetricKernel:
    """An ``m x m`` symmetric matrix of pair values."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError(f"kernel must be square, got shape {entries.shape}")
        scale = float(np.abs(entries).max()) if entries.size else 0.0
        gap = float(np.abs(entries - entries.T).max()) if entries.size else 0.0
        if gap > SYMMETRY_TOL * max(scale, 1.0):
            raise ValueError(f"kernel is not symmetric: max |S - S^T| = {gap:g}")
        # store an exactly symmetric copy so eigensolvers behave predictably
        self.entries = 0.5 * (entries + entries.T)

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    def copy(self) -> "SymmetricKernel":
        return SymmetricKernel(self.entries.copy())


def _as_matrix(kernel: SymmetricKernel | np.ndarray) -> np.ndarray:
    if isinstance(kernel, SymmetricKernel):
        return kernel.entries
    return np.asarray(kernel, dtype=float)


def kernel_norms(
    kernel: SymmetricKernel, spec: SpectralDecomposition | None = None
) -> dict[str, float]:
    """Return the standard norms of a kernel as a flat dict.

    Keys: ``nuclear``, ``frobenius``, ``operator`` (matrix scaling),
    ``l2_pi2`` (``m^{-1}`` times Frobenius), ``sup`` (largest absolute
    entry) and, when a spectrum is supplied, ``sobolev_l2_pi2``
    (``m^{-1} |W^{1/2} S|_F`` for the smoothing operator ``W`` of *spec*).
    """
    S = _as_matrix(kernel)
    m = S.shape[0]
    eigs = np.linalg.eigvalsh(S)
    fro = float(np.linalg.norm(S))
    out = {
        "nuclear": float(np.abs(eigs).sum()),
        "frobenius": fro,
        "operator": float(np.abs(eigs).max()) if m else 0.0,
        "l2_pi2": fro / m,
        "sup": float(np.abs(S).max()) if m else 0.0,
    }
    if spec is not None:
        if spec.m != m:
            raise ValueError(f"kernel size {m} does not match spectrum size {spec.m}")
        # tr(S W S) = sum_k lambda_k |S phi_k|^2, evaluated in the W eigenbasis
        SPhi = S @ spec.eigenvectors
        sob_sq = float(np.sum(spec.eigenvalues * np.einsum("ij,ij->j", SPhi, SPhi)))
        out["sobolev_l2_pi2"] = float(np.sqrt(max(sob_sq, 0.0))) / m
    return out


def truncate(kernel: SymmetricKernel, a: float) -> SymmetricKernel:
    """Clamp every entry of the kernel to ``[-a, a]``."""
    if a < 0:
        raise ValueError(f"truncation level must be nonnegative, got {a}")
    return SymmetricKernel(np.clip(_as_matrix(kernel), -a, a))


def sign_and_support(
    kernel: SymmetricKernel, zero_tol: float | None = None
) -> tuple[np.ndarray, np.ndarray, int]:
    """Spectral sign and support projector of a symmetric kernel.

    Eigenvalues with ``|mu| <= zero_tol`` (default ``1e-9`` times the
    operator norm) are treated as zero.  Returns ``(sign, projector, rank)``
    where ``sign = sum_k sign(mu_k) psi_k psi_k^T`` over retained
    eigenpairs and ``projector`` is the orthogonal projector onto their
    span.  The zero kernel yields two zero matrices and rank 0.
    """
    S = _as_matrix(kernel)
    m = S.shape[0]
    mu, psi = np.linalg.eigh(S)
    op = float(np.abs(mu).max()) if m else 0.0
    tol = RANK_TOL * op if zero_tol is None else float(zero_tol)
    keep = np.abs(mu) > tol
    rank = int(keep.sum())
    if rank == 0:
        z = np.zeros((m, m))
        return z, z.copy(), 0
    psi_k = psi[:, keep]
    sgn = (psi_k * np.sign(mu[keep])) @ psi_k.T
    proj = psi_k @ psi_k.T
    return 0.5 * (sgn + sgn.T), 0.5 * (proj + proj.T), rank


def eigenbasis_truncation(
    kernel: SymmetricKernel, spec: SpectralDecomposition, l: int
) -> SymmetricKernel:
    """Compress the kernel onto the first ``l`` smoothing eigenvectors.

    Returns ``P_l S P_l`` with ``P_l`` the projector onto
    ``span(phi_1..phi_l)``.  ``l = m`` returns ``S`` itself (up to
    round-off).
    """
    S = _as_matrix(kernel)
    m = S.shape[0]
    if not 1 <= l <= m:
        raise ValueError(f"l must lie in [1, {m}], got {l}")
    phi = spec.eigenvectors[:, :l]
    C = phi.T @ S @ phi
    return SymmetricKernel(phi @ (0.5 * (C + C.T)) @ phi.T)


def _support_energies(kernel: SymmetricKernel, spec: SpectralDecomposition) -> np.ndarray:
    """``|P_L phi_j|^2`` for every smoothing eigenvector ``phi_j``."""
    _, proj, rank = sign_and_support(kernel)
    if rank == 0:
        raise ValueError("coherence of the zero kernel is undefined (empty support)")
    PPhi = proj @ spec.eigenvectors
    return np.einsum("ij,ij->j", PPhi, PPhi)


def coherence_function(
    kernel: SymmetricKernel, spec: SpectralDecomposition, lam: float
) -> float:
    """Alignment ``sum_{lambda_j <= lam} |P_L phi_j|^2`` between the kernel
    support and the low-frequency part of the smoothing basis."""
    energies = _support_energies(kernel, spec)
    cut = int(np.searchsorted(spec.eigenvalues, lam, side="right"))
    return float(energies[:cut].sum())


def coherence_majorant(
    kernel: SymmetricKernel,
    spec: SpectralDecomposition,
    majorant: SpectralMajorant,
    lam: float,
) -> float:
    """Least regularized upper envelope of the coherence at level ``lam``.

    Evaluates ``sup_{s <= lam} G(s) * sup_{t >= s} phi(t) / G(t)`` exactly,
    where ``G`` is the regularized counting majorant and ``phi`` the
    coherence function of the kernel.  Both suprema are attained on the set
    of distinct eigenvalues (plus the query point itself): ``G`` is
    continuous and nondecreasing while ``phi`` is a right-continuous step
    function, so ``phi/G`` can only increase by jumping at an eigenvalue
    and ``G(s) * sup_{t >= s}(...)`` can only increase on the approach to
    one.  The scan below therefore loses nothing to discretization.
    """
    if lam < 0:
        raise ValueError(f"coherence level must be nonnegative, got {lam}")
    energies = _support_energies(kernel, spec)
    eigs = spec.eigenvalues
    breaks, start = np.unique(eigs, return_index=True)
    # cumulative coherence phi(b) at each distinct eigenvalue
    csum = np.cumsum(energies)
    ends = np.append(start[1:], len(eigs)) - 1
    phi_at = csum[ends]

    pts = breaks[breaks <= lam]
    phi_pts = phi_at[: len(pts)]
    if len(pts) == 0 or pts[-1] != lam:
        pts = np.append(pts, lam)
        phi_pts = np.append(phi_pts, phi_pts[-1] if len(phi_pts) else 0.0)
    tail_breaks = breaks[breaks > lam]
    tail_phi = phi_at[len(breaks) - len(tail_breaks):]

    all_pts = np.concatenate([pts, tail_breaks])
    all_phi = np.concatenate([phi_pts, tail_phi])
    G = majorant(all_pts)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(G > 0, all_phi / np.where(G > 0, G, 1.0), 0.0)
    # inner sup over t >= s: suffix maximum of phi/G
    suffix = np.maximum.accumulate(ratio[::-1])[::-1]
    k = len(pts)
    return float(np.max(G[:k] * suffix[:k]))


def save_kernel(kernel: SymmetricKernel, path) -> None:
    """Write a kernel as plain text: a header line ``m`` then the matrix."""
    S = _as_matrix(kernel)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{S.shape[0]}\n")
        np.savetxt(fh, S, fmt="%.17g")


def load_kernel(path) -> SymmetricKernel:
    """Read a kernel written by :func:`save_kernel`."""
    with open(path, "r", encoding="utf-8") as fh:
        m = int(fh.readline().strip())
        S = np.loadtxt(fh, ndmin=2)
    if S.shape != (m, m):
        raise ValueError(f"expected a {m} x {m} matrix, got shape {S.shape}")
    return SymmetricKernel(S)
