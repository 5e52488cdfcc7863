"""Incremental GP regression with a cached evaluation grid.

The state keeps the Cholesky factor of ``K_t + lam*I`` and, for a fixed set
of probe points (normally the whole action domain), the whitened cross
kernel ``V = L^{-1} K_{t,probe}``.  Adding a query point then costs
O(t * n_probe): its factor row is a column of ``V`` when the point is a probe,
and the new row of ``V`` follows from one inner product per probe.  Means use
the whitened observations ``w = L^{-1} Y`` so no backward solve is needed on
the grid.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidParameter,
    NumericalBreakdown,
    ObservationsMissing,
)
from .kernels import KernelSpec, cross_kernel, kernel_diag, kernel_eval
from .numerics import SpdFactor, empty_factor, extend_factor, forward_solve, solve_spd

NEGATIVE_VARIANCE_TOL = 1e-8


class PosteriorState:
    """Posterior after ``t`` queries under regularizer ``lam``.

    Parameters
    ----------
    kernel : KernelSpec
    lam : float
        Regularization (the assumed noise variance of the GP model).
    probes : array_like, optional
        Points at which mean and variance are maintained incrementally.

    Notes
    -----
    Variance updates need no observations.  Observations are attached in
    batches through :meth:`set_observations`, or one at a time through
    :meth:`append_observation`.
    """

    def __init__(self, kernel: KernelSpec, lam: float, probes=None, capacity: int = 64):
        if not lam > 0:
            raise InvalidParameter(f"lambda must be positive, got {lam}")
        self.kernel = kernel
        self.lam = float(lam)
        self._t = 0
        self._X = np.empty((capacity, 0))
        self.factor: SpdFactor = empty_factor(capacity)
        self._ys = np.empty(0)
        self._alpha: np.ndarray | None = None

        if probes is not None:
            P = np.asarray(probes, dtype=float)
            if P.ndim == 1:
                P = P.reshape(-1, 1)
            self.probes = P
            self._probe_prior = kernel_diag(kernel, P)
            if self._X.shape[1] == 0:
                self._X = np.empty((capacity, P.shape[1]))
            self._V = np.empty((capacity, P.shape[0]))
            self._w = np.empty(capacity)
            self._w_len = 0
            self._var_probe = self._probe_prior.copy()
        else:
            self.probes = None

    # -- bookkeeping -----------------------------------------------------

    @property
    def round(self) -> int:
        return self._t

    @property
    def queried_points(self) -> np.ndarray:
        return self._X[: self._t].copy()

    @property
    def observations_star(self) -> np.ndarray:
        return self._ys.copy()

    def _grow(self, need: int) -> None:
        cap = self._X.shape[0]
        if need <= cap:
            return
        new_cap = max(2 * cap, need)
        X = np.empty((new_cap, self._X.shape[1]))
        X[: self._t] = self._X[: self._t]
        self._X = X
        if self.probes is not None:
            V = np.empty((new_cap, self._V.shape[1]))
            V[: self._t] = self._V[: self._t]
            self._V = V
            w = np.empty(new_cap)
            w[: self._w_len] = self._w[: self._w_len]
            self._w = w

    def _as_query(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float)).reshape(-1)
        if self._X.shape[1] == 0:
            self._X = np.empty((self._X.shape[0], x.shape[0]))
        elif x.shape[0] != self._X.shape[1]:
            raise DimensionMismatch(
                f"point of dimension {x.shape[0]}, expected {self._X.shape[1]}"
            )
        return x

    # -- updates ---------------------------------------------------------

    def add_point(self, x, probe_index: int | None = None) -> "PosteriorState":
        """Append a query point (variance-only update).

        ``probe_index`` identifies ``x`` as a probe, which turns the factor
        update into an O(t) operation.
        """
        x = self._as_query(x)
        t = self._t
        cross = self._cross(x)
        corner = kernel_eval(self.kernel, x, x) + self.lam
        row = None
        if self.probes is not None and probe_index is not None:
            row = self._V[:t, probe_index]
        old_jitter = self.factor.jitter_applied
        new_factor = extend_factor(self.factor, cross, corner, solved_row=row)

        self._grow(t + 1)
        self._X[t] = x
        self._t = t + 1
        self.factor = new_factor
        self._alpha = None
        if self.probes is None:
            return self
        if new_factor.jitter_applied != old_jitter:
            self._rebuild_probe_cache()
            return self
        L = new_factor.lower
        k_new = cross_kernel(self.kernel, x[None, :], self.probes)[0]
        v_new = (k_new - L[t, :t] @ self._V[:t]) / L[t, t]
        self._V[t] = v_new
        self._var_probe = self._var_probe - v_new * v_new
        return self

    def _rebuild_probe_cache(self) -> None:
        t = self.round
        self._grow(t)
        if t == 0:
            self._var_probe = self._probe_prior.copy()
            self._w_len = 0
            return
        K = cross_kernel(self.kernel, self._X[:t], self.probes)
        self._V[:t] = forward_solve(self.factor, K)
        self._var_probe = self._probe_prior - np.einsum("ij,ij->j", self._V[:t], self._V[:t])
        n = min(self._w_len, len(self._ys), t)
        if n:
            self._w[:n] = forward_solve(_leading(self.factor, n), self._ys[:n])
        self._w_len = n

    def set_observations(self, ys) -> "PosteriorState":
        """Replace the observation vector ``Y*`` (length must equal ``t``)."""
        ys = np.asarray(ys, dtype=float).reshape(-1)
        if ys.shape[0] != self.round:
            raise DimensionMismatch(
                f"{ys.shape[0]} observations for {self.round} queried points"
            )
        self._ys = ys.copy()
        self._alpha = None
        if self.probes is not None:
            t = self.round
            self._grow(t)
            if t:
                self._w[:t] = forward_solve(self.factor, ys)
            self._w_len = t
        return self

    def append_observation(self, y: float) -> "PosteriorState":
        """Attach the observation for the next unobserved query (O(t))."""
        n = len(self._ys)
        if n >= self.round:
            raise DimensionMismatch("every queried point already has an observation")
        self._ys = np.append(self._ys, float(y))
        self._alpha = None
        if self.probes is not None and self._w_len == n:
            L = self.factor.lower
            self._w[n] = (float(y) - L[n, :n] @ self._w[:n]) / L[n, n]
            self._w_len = n + 1
        return self

    # -- queries ---------------------------------------------------------

    def _require_observations(self) -> None:
        if len(self._ys) != self.round:
            raise ObservationsMissing(
                f"{len(self._ys)} observations for {self.round} queried points"
            )

    def _weights(self) -> np.ndarray:
        if self._alpha is None:
            self._alpha = solve_spd(self.factor, self._ys) if self.round else np.empty(0)
        return self._alpha

    def _cross(self, x) -> np.ndarray:
        """``k_t(x)``: kernel between the queried points and ``x``."""
        if self._t == 0:
            return np.empty(0)
        x = self._as_query(x)
        return cross_kernel(self.kernel, self._X[: self._t], x[None, :])[:, 0]

    def mean(self, x) -> float:
        """``k_t(x)^T (K_t + lam I)^{-1} Y*``; zero before any data."""
        self._require_observations()
        if self.round == 0:
            return 0.0
        return float(self._cross(x) @ self._weights())

    def mean_for(self, ys, x) -> float:
        """Posterior mean at ``x`` for an alternative observation vector
        (same queries, same factor); nothing is cached."""
        ys = np.asarray(ys, dtype=float).reshape(-1)
        if ys.shape[0] != self.round:
            raise DimensionMismatch(f"{ys.shape[0]} observations for {self.round} points")
        if self.round == 0:
            return 0.0
        return float(self._cross(x) @ solve_spd(self.factor, ys))

    def variance(self, x) -> float:
        x = self._as_query(x)
        prior = kernel_eval(self.kernel, x, x)
        if self.round == 0:
            return prior
        z = forward_solve(self.factor, self._cross(x))
        return _clip_variance(prior - float(z @ z))

    # -- grid queries ----------------------------------------------------

    def probe_variance(self) -> np.ndarray:
        """Posterior variances at every probe, clipped at zero."""
        v = self._var_probe
        if np.min(v, initial=0.0) < -NEGATIVE_VARIANCE_TOL:
            raise NumericalBreakdown(f"posterior variance {np.min(v):.3e} < 0")
        return np.maximum(v, 0.0)

    def probe_std(self) -> np.ndarray:
        return np.sqrt(self.probe_variance())

    def probe_mean(self) -> np.ndarray:
        self._require_observations()
        t = self.round
        if t == 0:
            return np.zeros(self.probes.shape[0])
        if self._w_len != t:
            self._w[:t] = forward_solve(self.factor, self._ys)
            self._w_len = t
        return self._w[:t] @ self._V[:t]

    def probe_mean_for(self, ys) -> np.ndarray:
        """Probe means for an alternative observation vector."""
        ys = np.asarray(ys, dtype=float).reshape(-1)
        t = self.round
        if ys.shape[0] != t:
            raise DimensionMismatch(f"{ys.shape[0]} observations for {t} points")
        if t == 0:
            return np.zeros(self.probes.shape[0])
        return forward_solve(self.factor, ys) @ self._V[:t]


def _leading(factor: SpdFactor, n: int) -> SpdFactor:
    return SpdFactor(n, factor.jitter_applied, factor._store)


def _clip_variance(raw: float) -> float:
    if raw < -NEGATIVE_VARIANCE_TOL:
        raise NumericalBreakdown(f"posterior variance {raw:.3e} < 0")
    return max(raw, 0.0)


def posterior_init(kernel: KernelSpec, lam: float, probes=None, capacity: int = 64) -> PosteriorState:
    return PosteriorState(kernel, lam, probes=probes, capacity=capacity)
