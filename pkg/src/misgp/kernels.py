"""Normalized kernels (linear, squared exponential, half-integer Matern)
and finite action domains."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, InvalidParameter

_SQRT3 = math.sqrt(3.0)
_SQRT5 = math.sqrt(5.0)


class KernelFamily(str, Enum):
    LINEAR = "linear"
    SQUARED_EXPONENTIAL = "se"
    MATERN = "matern"


MATERN_SMOOTHNESS = (0.5, 1.5, 2.5)


@dataclass(frozen=True)
class KernelSpec:
    family: KernelFamily
    lengthscale: float = 1.0
    smoothness: float = 2.5

    def __post_init__(self):
        object.__setattr__(self, "family", KernelFamily(self.family))
        if not self.lengthscale > 0:
            raise InvalidParameter(f"lengthscale must be positive, got {self.lengthscale}")
        if self.family is KernelFamily.MATERN and self.smoothness not in MATERN_SMOOTHNESS:
            raise InvalidParameter(
                f"Matern smoothness must be one of {MATERN_SMOOTHNESS}, got {self.smoothness}"
            )

    @classmethod
    def linear(cls) -> "KernelSpec":
        return cls(KernelFamily.LINEAR)

    @classmethod
    def se(cls, lengthscale: float) -> "KernelSpec":
        return cls(KernelFamily.SQUARED_EXPONENTIAL, lengthscale)

    @classmethod
    def matern(cls, lengthscale: float, smoothness: float) -> "KernelSpec":
        return cls(KernelFamily.MATERN, lengthscale, smoothness)

    @property
    def stationary(self) -> bool:
        return self.family is not KernelFamily.LINEAR

    def to_dict(self) -> dict:
        out = {"family": self.family.value}
        if self.stationary:
            out["lengthscale"] = self.lengthscale
        if self.family is KernelFamily.MATERN:
            out["smoothness"] = self.smoothness
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "KernelSpec":
        return cls(
            data["family"],
            float(data.get("lengthscale", 1.0)),
            float(data.get("smoothness", 2.5)),
        )


def _profile(spec: KernelSpec, r):
    """Stationary kernel value as a function of Euclidean distance ``r``."""
    if spec.family is KernelFamily.SQUARED_EXPONENTIAL:
        s = r / spec.lengthscale
        return np.exp(-0.5 * s * s)
    s = r / spec.lengthscale
    if spec.smoothness == 0.5:
        return np.exp(-s)
    if spec.smoothness == 1.5:
        return (1.0 + _SQRT3 * s) * np.exp(-_SQRT3 * s)
    return (1.0 + _SQRT5 * s + (5.0 / 3.0) * s * s) * np.exp(-_SQRT5 * s)


def _distance(x: np.ndarray, y: np.ndarray) -> float:
    # Squared differences are symmetric in (x, y) bit for bit.
    d = x - y
    return math.sqrt(float(np.dot(d, d)))


def kernel_eval(spec: KernelSpec, x, y) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise DimensionMismatch(f"points have shapes {x.shape} and {y.shape}")
    if spec.family is KernelFamily.LINEAR:
        return float(np.dot(x, y))
    return float(_profile(spec, _distance(x, y)))


def _as_points(points) -> np.ndarray:
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P.reshape(-1, 1) if P.size else P.reshape(0, 1)
    if P.ndim != 2:
        raise DimensionMismatch(f"expected a list of vectors, got array of shape {P.shape}")
    return P


def cross_kernel(spec: KernelSpec, A, B) -> np.ndarray:
    """Matrix ``[k(a_i, b_j)]`` for two point lists (vectorized)."""
    A = _as_points(A)
    B = _as_points(B)
    if A.shape[1] != B.shape[1]:
        raise DimensionMismatch(f"point dimensions differ: {A.shape[1]} vs {B.shape[1]}")
    if spec.family is KernelFamily.LINEAR:
        return A @ B.T
    diff = A[:, None, :] - B[None, :, :]
    r = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return _profile(spec, r)


def kernel_diag(spec: KernelSpec, points) -> np.ndarray:
    """``k(x, x)`` for every point."""
    P = _as_points(points)
    if spec.family is KernelFamily.LINEAR:
        return np.einsum("ij,ij->i", P, P)
    return np.ones(P.shape[0])


def gram_matrix(spec: KernelSpec, points) -> np.ndarray:
    """Gram matrix; computed on the lower triangle and mirrored so it is
    exactly symmetric."""
    P = _as_points(points)
    K = cross_kernel(spec, P, P)
    lower = np.tril(K)
    return lower + np.tril(K, -1).T


@dataclass(frozen=True, eq=False)
class ActionDomain:
    """Finite ordered set of actions; the row index is the action identity."""

    points: np.ndarray

    def __post_init__(self):
        P = _as_points(self.points).copy()
        P.flags.writeable = False
        object.__setattr__(self, "points", P)
        if P.shape[0] == 0:
            raise InvalidParameter("domain must contain at least one point")
        if P.shape[0] > 1:
            gaps = np.max(np.abs(P[:, None, :] - P[None, :, :]), axis=2)
            np.fill_diagonal(gaps, np.inf)
            if np.min(gaps) < 1e-12:
                raise InvalidParameter("domain points must be distinct")

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def __getitem__(self, index) -> np.ndarray:
        return self.points[index]

    def validate_for(self, spec: KernelSpec) -> None:
        """Linear kernels need every point inside the closed unit ball."""
        if spec.family is KernelFamily.LINEAR:
            norms = np.linalg.norm(self.points, axis=1)
            if np.any(norms > 1.0 + 1e-12):
                raise InvalidParameter("linear-kernel domain points must have norm <= 1")

    @classmethod
    def grid(cls, dimension: int, resolution: int, low: float = 0.0, high: float = 1.0):
        """Regular hypercube grid with ``resolution`` points per axis."""
        if dimension < 1 or resolution < 1:
            raise InvalidParameter("dimension and resolution must be positive")
        axis = np.linspace(low, high, resolution) if resolution > 1 else np.array([0.5 * (low + high)])
        pts = np.array(list(itertools.product(axis, repeat=dimension)), dtype=float)
        return cls(pts)

    @classmethod
    def from_csv(cls, path) -> "ActionDomain":
        """Load one point per row; a non-numeric first row is taken as a header."""
        rows = []
        with Path(path).open(newline="") as fh:
            for i, row in enumerate(csv.reader(fh)):
                if not row or all(not c.strip() for c in row):
                    continue
                try:
                    rows.append([float(c) for c in row])
                except ValueError:
                    if i == 0:
                        continue
                    raise InvalidParameter(f"non-numeric entry in {path} row {i + 1}")
        if not rows:
            raise InvalidParameter(f"no points in {path}")
        if len({len(r) for r in rows}) != 1:
            raise DimensionMismatch(f"rows of {path} have differing lengths")
        return cls(np.array(rows))
