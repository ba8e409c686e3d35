"""Uniform-design sampling of noisy kernel entries.

Each observation picks a vertex pair ``(u, v)`` uniformly and
independently (diagonal pairs included, pairs may repeat) and returns
``y`` with ``E[y | u, v] = S(u, v)`` and ``|y| <= a`` almost surely.

Noise mechanisms are written ``"none"``, ``"uniform:0.1"``,
``"sign:0.1"`` or ``"binary"``:

* ``uniform:s`` adds ``Uniform[-s, s]``; requires ``|S|_inf + s <= a``,
* ``sign:s`` adds ``+-s`` fair coin flips; same requirement,
* ``binary`` returns ``+-a`` with ``P(y = a) = 1/2 + S(u, v)/(2a)``;
  requires ``|S|_inf <= a/2``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from randkit.kernels import SymmetricKernel
from randkit.rng import make_rng

__all__ = [
    "Sample",
    "Dataset",
    "parse_noise",
    "draw_dataset",
    "empirical_loss",
    "epsilon_star",
    "default_epsilon",
    "save_dataset",
    "load_dataset",
]

Y_TOL = 1e-12


class Sample(NamedTuple):
    u: int
    v: int
    y: float


@dataclass
class Dataset:
    """``n`` observations ``(u_j, v_j, y_j)`` on ``m`` vertices, ``|y| <= a``."""

    u: np.ndarray
    v: np.ndarray
    y: np.ndarray
    m: int
    a: float

    def __post_init__(self) -> None:
        self.u = np.asarray(self.u, dtype=np.int64)
        self.v = np.asarray(self.v, dtype=np.int64)
        self.y = np.asarray(self.y, dtype=float)
        if not (self.u.shape == self.v.shape == self.y.shape) or self.u.ndim != 1:
            raise ValueError("u, v, y must be one-dimensional arrays of equal length")
        if self.n == 0:
            raise ValueError("dataset must contain at least one sample")
        if self.u.min() < 0 or self.u.max() >= self.m or self.v.min() < 0 or self.v.max() >= self.m:
            raise ValueError(f"vertex indices must lie in [0, {self.m})")
        ymax = float(np.abs(self.y).max())
        if ymax > self.a + Y_TOL:
            raise ValueError(f"|y| <= a={self.a} violated: max |y| = {ymax}")

    @property
    def n(self) -> int:
        return self.u.shape[0]

    def samples(self) -> Iterator[Sample]:
        for u, v, y in zip(self.u, self.v, self.y):
            yield Sample(int(u), int(v), float(y))

    def subset(self, idx) -> "Dataset":
        return Dataset(self.u[idx], self.v[idx], self.y[idx], self.m, self.a)


def parse_noise(noise: str) -> tuple[str, float]:
    """Split a noise spec string into ``(kind, level)``.

    Accepts ``uniform:0.1`` as well as the functional form ``uniform(0.1)``;
    ``binary`` and ``binary_packing`` are synonyms.
    """
    text = noise.strip()
    if text.endswith(")") and "(" in text:
        head, _, inner = text[:-1].partition("(")
        text = f"{head}:{inner}"
    kind, _, level = text.partition(":")
    kind = kind.strip().lower()
    if kind == "none":
        return "none", 0.0
    if kind in {"binary", "binary_packing"}:
        return "binary", 0.0
    if kind in {"uniform", "sign"}:
        if not level:
            raise ValueError(f"noise {kind!r} needs a level, e.g. {kind}:0.1")
        s = float(level)
        if s < 0:
            raise ValueError(f"noise level must be nonnegative, got {s}")
        return kind, s
    raise ValueError(f"unknown noise spec {noise!r}")


def draw_dataset(
    kernel: SymmetricKernel, a: float, noise: str, n: int, seed: int = 0
) -> Dataset:
    """Draw ``n`` uniform-design samples of the kernel under the given noise."""
    if n < 1:
        raise ValueError(f"need n >= 1 samples, got {n}")
    S = kernel.entries
    m = kernel.m
    sup = float(np.abs(S).max())
    kind, level = parse_noise(noise)
    if kind in {"uniform", "sign"} and sup + level > a * (1 + Y_TOL):
        raise ValueError(
            f"|S|_inf + noise = {sup + level:g} exceeds a = {a:g}; responses would leave [-a, a]"
        )
    if kind == "binary" and sup > 0.5 * a * (1 + Y_TOL):
        raise ValueError(f"binary noise needs |S|_inf <= a/2, got |S|_inf = {sup:g}, a = {a:g}")

    rng = make_rng(seed)
    u = rng.integers(0, m, size=n)
    v = rng.integers(0, m, size=n)
    s = S[u, v]
    if kind == "none":
        y = s
    elif kind == "uniform":
        y = s + rng.uniform(-level, level, size=n)
    elif kind == "sign":
        y = s + level * rng.choice([-1.0, 1.0], size=n)
    else:  # binary
        p_plus = 0.5 + s / (2.0 * a)
        y = np.where(rng.random(size=n) < p_plus, a, -a)
    return Dataset(u, v, y, m=m, a=float(a))


def empirical_loss(kernel: SymmetricKernel | np.ndarray, data: Dataset) -> float:
    """Mean squared error of the kernel on the observed samples."""
    S = kernel.entries if isinstance(kernel, SymmetricKernel) else np.asarray(kernel)
    res = data.y - S[data.u, data.v]
    return float(res @ res) / data.n


def _noise_scale(n: int, m: int, a: float, factor: float) -> float:
    if n < 1 or m < 1:
        raise ValueError(f"need n >= 1 and m >= 1, got n={n}, m={m}")
    logm = np.log(2.0 * m)
    return factor * a * max(np.sqrt(logm / (n * m)), logm / n)


def epsilon_star(n: int, m: int, a: float) -> float:
    """Critical noise level ``16 a max(sqrt(log(2m)/(nm)), log(2m)/n)``.

    With probability at least ``1 - (2m)^{-1}`` the sampling-noise
    operator of any dataset of this shape has norm below this value.
    """
    return _noise_scale(n, m, a, 16.0)


def default_epsilon(n: int, m: int, a: float, big_d: float = 32.0) -> float:
    """Default convex-penalty level ``D a max(sqrt(log(2m)/(nm)), log(2m)/n)``."""
    if big_d <= 0:
        raise ValueError(f"penalty multiplier must be positive, got {big_d}")
    return _noise_scale(n, m, a, big_d)


def save_dataset(data: Dataset, path) -> None:
    """Write samples as CSV with header ``u,v,y``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["u", "v", "y"])
        for u, v, y in zip(data.u, data.v, data.y):
            writer.writerow([int(u), int(v), repr(float(y))])


def load_dataset(path, m: int, a: float) -> Dataset:
    """Read a CSV written by :func:`save_dataset` (header ``u,v,y``)."""
    u, v, y = [], [], []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header] != ["u", "v", "y"]:
            raise ValueError(f"expected header u,v,y got {header}")
        for row in reader:
            if not row:
                continue
            u.append(int(row[0]))
            v.append(int(row[1]))
            y.append(float(row[2]))
    return Dataset(np.array(u), np.array(v), np.array(y), m=m, a=a)
