"""Spectral decompositions of graph smoothing operators.

The smoothing operator of a graph with Laplacian ``L`` at power ``q >= 1``
is ``W = L^q``.  Its eigenvalues ``0 = lambda_1 <= ... <= lambda_m`` and
orthonormal eigenvectors ``phi_1..phi_m`` drive everything else in the
package: smoothness penalties, coherence envelopes, and rate formulas.

Index conventions follow the mathematics: ``k0``, ``growth_c`` and
:meth:`SpectralDecomposition.lambda_at` are one-based, and eigenvalues
beyond ``m`` count as ``+inf`` (so quotients ``rho^2 / lambda_{m+1}``
vanish and minima with them are unaffected).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg

if TYPE_CHECKING:
    from randkit.kernels import SymmetricKernel

__all__ = [
    "SpectralDecomposition",
    "smoothing_operator",
    "spectral_function",
    "SpectralMajorant",
    "regularized_majorant",
]

#: absolute floor of the positive-eigenvalue threshold defining ``k0``
K0_ABS_TOL = 1e-10
#: relative (to the largest eigenvalue) part of the ``k0`` threshold
K0_REL_TOL = 1e-12


@dataclass
class SpectralDecomposition:
    """Eigensystem of a smoothing operator ``W = L^q``.

    ``eigenvalues`` are ascending and nonnegative, ``eigenvectors[:, k]``
    is the unit eigenvector of ``eigenvalues[k]``.  ``k0`` is the one-based
    index of the first eigenvalue exceeding
    ``max(1e-10, 1e-12 * lambda_m)`` and ``growth_c >= 1`` bounds every
    consecutive ratio ``lambda_{k+1} / lambda_k`` from ``k0`` on.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    q: float = 1.0
    k0: int = field(init=False)
    growth_c: float = field(init=False)

    def __post_init__(self) -> None:
        lam = np.asarray(self.eigenvalues, dtype=float)
        phi = np.asarray(self.eigenvectors, dtype=float)
        m = lam.shape[0]
        if phi.shape != (m, m):
            raise ValueError(f"eigenvector matrix must be {m} x {m}, got {phi.shape}")
        if (np.diff(lam) < 0).any():
            raise ValueError("eigenvalues must be ascending")
        if m and lam[0] < 0:
            raise ValueError("eigenvalues must be nonnegative")
        gram_gap = float(np.abs(phi.T @ phi - np.eye(m)).max()) if m else 0.0
        if gram_gap > 1e-8:
            raise ValueError(f"eigenvectors are not orthonormal: gap {gram_gap:g}")
        self.eigenvalues = lam
        self.eigenvectors = phi
        thresh = max(K0_ABS_TOL, K0_REL_TOL * (lam[-1] if m else 0.0))
        above = np.nonzero(lam > thresh)[0]
        self.k0 = int(above[0]) + 1 if len(above) else m + 1
        ratios = [
            lam[k] / lam[k - 1]
            for k in range(self.k0, m)  # zero-based k pairs (k-1, k), k >= k0
        ]
        self.growth_c = float(max(ratios, default=1.0))
        if self.growth_c < 1.0:
            self.growth_c = 1.0

    @property
    def m(self) -> int:
        return self.eigenvalues.shape[0]

    def lambda_at(self, k: int) -> float:
        """One-based eigenvalue access with ``lambda_k = +inf`` for ``k > m``."""
        if k < 1:
            raise ValueError(f"eigenvalue index must be >= 1, got {k}")
        if k > self.m:
            return np.inf
        return float(self.eigenvalues[k - 1])

    def operator(self) -> np.ndarray:
        """Reassemble the dense operator ``Phi diag(lambda) Phi^T``."""
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T


def smoothing_operator(lap: "SymmetricKernel | np.ndarray", q: float = 1.0) -> SpectralDecomposition:
    """Spectral decomposition of ``W = L^q`` for a graph Laplacian ``L``.

    ``q`` must be positive (non-integer powers are taken spectrally).
    The input must be symmetric PSD: eigenvalues below ``-1e-8`` (relative
    to the largest) are rejected, smaller round-off negatives are clipped
    to zero.  For integer ``q`` the reassembled operator is checked
    against the dense matrix power to one part in ``1e8``.
    """
    if q <= 0:
        raise ValueError(f"smoothing power must be positive, got {q}")
    L = lap.entries if hasattr(lap, "entries") else np.asarray(lap, dtype=float)
    sym_gap = float(np.abs(L - L.T).max())
    if sym_gap > 1e-8 * max(1.0, float(np.abs(L).max())):
        raise ValueError(f"operator must be symmetric: max |L - L^T| = {sym_gap:g}")
    lam, phi = scipy.linalg.eigh(L)
    if lam[0] < -1e-8 * max(1.0, float(lam[-1])):
        raise ValueError(f"operator is not positive semidefinite: min eigenvalue {lam[0]:g}")
    lam = np.maximum(lam, 0.0)
    w = lam**q
    spec = SpectralDecomposition(w, phi, q=float(q))
    if float(q).is_integer():
        dense = np.linalg.matrix_power(L, int(q))
        scale = max(float(np.abs(dense).max()), 1e-300)
        gap = float(np.abs(spec.operator() - dense).max())
        if gap > 1e-8 * scale:
            raise ArithmeticError(
                f"eigendecomposition failed to reproduce L^{int(q)}: rel gap {gap / scale:g}"
            )
    return spec


def spectral_function(spec: SpectralDecomposition, lam) -> int | np.ndarray:
    """Counting function ``F(lam) = #{j : lambda_j <= lam}`` (right continuous)."""
    counts = np.searchsorted(spec.eigenvalues, lam, side="right")
    if np.isscalar(lam):
        return int(counts)
    return counts


@dataclass
class SpectralMajorant:
    """Minimal regularized majorant of the eigenvalue counting function.

    For ``gamma`` in (0, 1) this is the smallest function ``G`` with
    ``G >= F`` pointwise and ``t -> t^{gamma-1} G(t)`` nonincreasing,
    namely ``G(t) = sup_{s >= t} F(s) (t/s)^{1-gamma}``.  Because ``F`` is
    constant between eigenvalues and ``(t/s)^{1-gamma}`` decreases in
    ``s``, the supremum is attained either at ``s = t`` or at an
    eigenvalue above ``t``; :meth:`__call__` evaluates it in closed form
    from suffix maxima of ``F(b)/b^{1-gamma}`` over the distinct positive
    eigenvalues ``b``.  In particular ``G(0) = F(0)`` (the number of zero
    eigenvalues) and ``G(t) = m`` for ``t >= lambda_m``.

    ``breakpoints`` are the distinct positive eigenvalues and ``values``
    the majorant there; queries between and beyond breakpoints use the
    exact closed form, not interpolation.
    """

    gamma: float
    breakpoints: np.ndarray
    values: np.ndarray
    _zeros: float = field(repr=False)
    _counts: np.ndarray = field(repr=False)
    _suffix: np.ndarray = field(repr=False)

    def __call__(self, lam) -> float | np.ndarray:
        lam_arr = np.asarray(lam, dtype=float)
        if (lam_arr < 0).any():
            raise ValueError("majorant is defined for nonnegative arguments")
        idx = np.searchsorted(self.breakpoints, lam_arr, side="right")
        F = np.where(idx > 0, self._counts[np.maximum(idx - 1, 0)], self._zeros)
        nb = len(self.breakpoints)
        if nb:
            tail = np.where(idx < nb, self._suffix[np.minimum(idx, nb - 1)], 0.0)
        else:
            tail = np.zeros_like(lam_arr)
        out = np.maximum(F, lam_arr ** (1.0 - self.gamma) * tail)
        if np.isscalar(lam):
            return float(out)
        return out


def regularized_majorant(spec: SpectralDecomposition, gamma: float) -> SpectralMajorant:
    """Build the minimal regularized majorant of ``F`` at exponent ``gamma``.

    Eigenvalues below the ``k0`` positivity threshold count as zeros (they
    contribute to ``F`` but are not breakpoints), so round-off noise on a
    Laplacian's kernel eigenvalue cannot inject a spurious breakpoint at
    ``~1e-16`` where ``lambda^{gamma-1}`` blows up.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie strictly between 0 and 1, got {gamma}")
    eigs = spec.eigenvalues
    breaks, start = np.unique(eigs, return_index=True)
    ends = np.append(start[1:], len(eigs))
    counts = ends.astype(float)  # F(b_i) = number of eigenvalues <= b_i
    zeros = 0.0
    thresh = max(K0_ABS_TOL, K0_REL_TOL * (eigs[-1] if len(eigs) else 0.0))
    cut = int(np.searchsorted(breaks, thresh, side="right"))
    if cut:
        zeros = counts[cut - 1]
        breaks, counts = breaks[cut:], counts[cut:]
    ratio = counts / breaks ** (1.0 - gamma) if len(breaks) else counts
    suffix = np.maximum.accumulate(ratio[::-1])[::-1] if len(ratio) else ratio
    maj = SpectralMajorant(
        gamma=float(gamma),
        breakpoints=breaks,
        values=np.empty(0),
        _zeros=zeros,
        _counts=counts,
        _suffix=suffix,
    )
    maj.values = np.asarray(maj(breaks), dtype=float) if len(breaks) else np.empty(0)
    return maj
