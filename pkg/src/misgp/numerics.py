"""Dense SPD linear algebra: jittered Cholesky, triangular solves, and
O(n^2) bordering updates of an existing factor.

Factors are immutable values.  Internally consecutive extensions share one
preallocated square buffer, so growing a factor row by row costs O(n) memory
traffic per row instead of a full copy; an older factor only ever looks at
its own leading block, which later extensions never touch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .errors import DimensionMismatch, InvalidParameter, NotFactorizable

DEFAULT_BASE_JITTER = 1e-10
JITTER_LEVELS = 7  # base * 10**j for j = 0..6
PIVOT_FLOOR = 1e-12
SYMMETRY_RTOL = 1e-10


class _Storage:
    __slots__ = ("buf", "claimed")

    def __init__(self, capacity: int):
        self.buf = np.zeros((capacity, capacity))
        self.claimed = 0


@dataclass(frozen=True, eq=False)
class SpdFactor:
    """Lower Cholesky factor ``L`` with ``L @ L.T == M + jitter_applied * I``."""

    dim: int
    jitter_applied: float
    _store: _Storage = field(repr=False)

    @property
    def lower(self) -> np.ndarray:
        view = self._store.buf[: self.dim, : self.dim]
        view.flags.writeable = False
        return view

    @property
    def lower_triangular_entries(self) -> np.ndarray:
        """Row-major packed lower triangle (length ``dim*(dim+1)/2``)."""
        return self.lower[np.tril_indices(self.dim)]

    def reconstruct(self) -> np.ndarray:
        """The factored matrix ``L L^T`` (jitter included)."""
        L = self.lower
        return L @ L.T


def _from_dense(L: np.ndarray, jitter: float, capacity: int | None = None) -> SpdFactor:
    n = L.shape[0]
    store = _Storage(max(capacity or 0, n, 4))
    store.buf[:n, :n] = L
    store.claimed = n
    return SpdFactor(n, float(jitter), store)


def empty_factor(capacity: int = 16) -> SpdFactor:
    """The factor of the 0x0 matrix, ready to be extended."""
    return SpdFactor(0, 0.0, _Storage(max(capacity, 4)))


def _check_square(matrix) -> np.ndarray:
    A = np.asarray(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    return A


def cholesky_factor(matrix, base_jitter: float = DEFAULT_BASE_JITTER) -> SpdFactor:
    """Factor a symmetric matrix, adding diagonal jitter only if needed.

    Parameters
    ----------
    matrix : (n, n) array_like
        Symmetric to within a relative asymmetry of 1e-10.
    base_jitter : float
        First level of the schedule ``base_jitter * 10**j``, ``j = 0..6``,
        tried in order after the plain factorization fails.

    Returns
    -------
    SpdFactor
        ``jitter_applied`` is 0.0 when no rescue was needed.

    Raises
    ------
    NotFactorizable
        If every level of the schedule fails.
    """
    A = _check_square(matrix)
    if base_jitter < 0:
        raise InvalidParameter("base_jitter must be nonnegative")
    n = A.shape[0]
    if n == 0:
        return empty_factor()
    scale = max(1.0, float(np.max(np.abs(A))))
    if np.max(np.abs(A - A.T)) > SYMMETRY_RTOL * scale:
        raise InvalidParameter("matrix is not symmetric")

    levels = [0.0] + [base_jitter * 10.0**j for j in range(JITTER_LEVELS)]
    tried = set()
    eye = np.eye(n)
    for jitter in levels:
        if jitter in tried:
            continue
        tried.add(jitter)
        try:
            L = np.linalg.cholesky(A + jitter * eye if jitter else A)
        except np.linalg.LinAlgError:
            continue
        diag = np.diag(L)
        if np.all(np.isfinite(L)) and np.all(diag > 0):
            return _from_dense(L, jitter)
    raise NotFactorizable(
        f"matrix of size {n} not factorizable with jitter up to {max(levels):g}"
    )


def forward_solve(factor: SpdFactor, rhs) -> np.ndarray:
    """Solve ``L z = rhs`` (rhs may be a vector or a matrix of columns)."""
    b = np.asarray(rhs, dtype=float)
    if b.shape[0] != factor.dim:
        raise DimensionMismatch(f"rhs has {b.shape[0]} rows, factor has dim {factor.dim}")
    if factor.dim == 0:
        return b.copy()
    return solve_triangular(factor.lower, b, lower=True, check_finite=False)


def solve_spd(factor: SpdFactor, rhs) -> np.ndarray:
    """Solve ``(L L^T) v = rhs`` by forward then backward substitution."""
    b = np.asarray(rhs, dtype=float)
    if b.ndim == 0 or b.shape[0] != factor.dim:
        raise DimensionMismatch(
            f"rhs length {b.shape[0] if b.ndim else 0} does not match factor dim {factor.dim}"
        )
    if factor.dim == 0:
        return b.copy()
    return cho_solve((factor.lower, True), b, check_finite=False)


def extend_factor(
    factor: SpdFactor,
    cross_column,
    corner: float,
    base_jitter: float = DEFAULT_BASE_JITTER,
    solved_row: np.ndarray | None = None,
) -> SpdFactor:
    """Factor of the bordered matrix ``[[M, c], [c^T, corner]]``.

    One triangular solve plus a square root.  If ``solved_row`` (that is,
    ``L^{-1} c``) is already known, the solve is skipped and the update is
    O(n).  A pivot at or below 1e-12 triggers a full jittered
    refactorization instead.
    """
    n = factor.dim
    c = np.asarray(cross_column, dtype=float).reshape(-1)
    if c.shape[0] != n:
        raise DimensionMismatch(f"cross column has length {c.shape[0]}, factor has dim {n}")
    jitter = factor.jitter_applied
    if solved_row is None:
        row = forward_solve(factor, c) if n else c
    else:
        row = np.asarray(solved_row, dtype=float)
    pivot = float(corner) + jitter - float(row @ row)

    if not pivot > PIVOT_FLOOR:
        M = factor.reconstruct() - jitter * np.eye(n)
        ext = np.empty((n + 1, n + 1))
        ext[:n, :n] = M
        ext[:n, n] = c
        ext[n, :n] = c
        ext[n, n] = corner
        ext = 0.5 * (ext + ext.T)
        return cholesky_factor(ext, base_jitter=base_jitter)

    store = factor._store
    cap = store.buf.shape[0]
    if store.claimed != n or n + 1 > cap:
        new = _Storage(max(2 * cap, n + 1) if n + 1 > cap else cap)
        new.buf[:n, :n] = store.buf[:n, :n]
        new.claimed = n
        store = new
    store.buf[n, :n] = row
    store.buf[n, n] = np.sqrt(pivot)
    store.claimed = n + 1
    return SpdFactor(n + 1, jitter, store)
