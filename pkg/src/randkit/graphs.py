"""Weighted graphs and their Laplacians.

Vertices are ``0..m-1``.  A graph is stored as its symmetric nonnegative
weight matrix with zero diagonal; the (combinatorial) Laplacian is
``D - A`` with ``D`` the diagonal of row sums.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse

from randkit.kernels import SymmetricKernel

__all__ = [
    "WeightedGraph",
    "path_graph",
    "cycle_graph",
    "complete_graph",
    "empty_graph",
    "laplacian",
    "load_graph",
    "save_graph",
]


@dataclass
class WeightedGraph:
    """An undirected weighted graph on ``m`` vertices."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"weight matrix must be square, got shape {w.shape}")
        if w.shape[0] < 1:
            raise ValueError("graph needs at least one vertex")
        if not np.isfinite(w).all():
            raise ValueError("weights must be finite")
        if (w < 0).any():
            raise ValueError("weights must be nonnegative")
        scale = max(float(w.max()), 1.0) if w.size else 1.0
        if np.abs(w - w.T).max() > 1e-12 * scale:
            raise ValueError("weight matrix must be symmetric")
        if np.abs(np.diag(w)).max() > 0:
            raise ValueError("weight matrix must have zero diagonal")
        self.weights = 0.5 * (w + w.T)

    @property
    def m(self) -> int:
        return self.weights.shape[0]


def path_graph(m: int, weight: float = 1.0) -> WeightedGraph:
    """Path ``0 - 1 - ... - (m-1)`` with constant edge weight."""
    if m < 2:
        raise ValueError("path graph needs m >= 2")
    w = np.zeros((m, m))
    idx = np.arange(m - 1)
    w[idx, idx + 1] = w[idx + 1, idx] = weight
    return WeightedGraph(w)


def cycle_graph(m: int, weight: float = 1.0) -> WeightedGraph:
    """Cycle on ``m >= 3`` vertices with constant edge weight."""
    if m < 3:
        raise ValueError("cycle graph needs m >= 3")
    w = np.zeros((m, m))
    idx = np.arange(m)
    nxt = (idx + 1) % m
    w[idx, nxt] = w[nxt, idx] = weight
    return WeightedGraph(w)


def complete_graph(m: int, weight: float = 1.0) -> WeightedGraph:
    """Complete graph on ``m >= 2`` vertices with constant edge weight."""
    if m < 2:
        raise ValueError("complete graph needs m >= 2")
    w = np.full((m, m), float(weight))
    np.fill_diagonal(w, 0.0)
    return WeightedGraph(w)


def empty_graph(m: int) -> WeightedGraph:
    """Edgeless graph on ``m`` vertices."""
    return WeightedGraph(np.zeros((m, m)))


def laplacian(graph: WeightedGraph) -> SymmetricKernel:
    """Combinatorial Laplacian ``D - A`` of the graph."""
    w = graph.weights
    lap = np.diag(w.sum(axis=1)) - w
    return SymmetricKernel(lap)


def load_graph(path) -> WeightedGraph:
    """Read a graph from a Matrix Market file (``.mtx``) or dense text.

    Dense text files hold the full weight matrix, whitespace separated.
    Validation (symmetry, nonnegativity, zero diagonal) is applied either
    way.
    """
    p = Path(path)
    if p.suffix.lower() in {".mtx", ".mm"}:
        w = scipy.io.mmread(p)
        if scipy.sparse.issparse(w):
            w = w.toarray()
        return WeightedGraph(np.asarray(w, dtype=float))
    return WeightedGraph(np.loadtxt(p, ndmin=2))


def save_graph(graph: WeightedGraph, path) -> None:
    """Write a graph's weight matrix as dense text readable by :func:`load_graph`."""
    np.savetxt(path, graph.weights, fmt="%.17g")
