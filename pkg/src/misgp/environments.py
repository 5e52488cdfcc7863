"""Misspecified bandit environments and regret bookkeeping.

An objective is stored through its values on the finite action domain:
the best-in-class RKHS function ``f_tilde``, a bounded misspecification
``m`` and the true reward ``f_star = f_tilde + m``.  Objectives may also
carry an optimum that lies off the algorithm-visible grid (the spike
construction); regret is always measured against it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import ActionNotInSet, DegenerateGram, InvalidParameter
from .kernels import ActionDomain, KernelSpec, cross_kernel, gram_matrix
from .numerics import cholesky_factor
from .rng import Stream

MAX_SYNTHESIS_JITTER = 1e-6


# ---------------------------------------------------------------------------
# RKHS members
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RkhsFunction:
    """``x -> sum_i coefficients[i] * k(centers[i], x)``."""

    kernel: KernelSpec
    centers: np.ndarray
    coefficients: np.ndarray
    cached_norm: float = field(init=False)

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.centers, dtype=float))
        a = np.asarray(self.coefficients, dtype=float).reshape(-1)
        if C.shape[0] != a.shape[0]:
            raise InvalidParameter("one coefficient per center required")
        object.__setattr__(self, "centers", C)
        object.__setattr__(self, "coefficients", a)
        object.__setattr__(self, "cached_norm", self.rkhs_norm())

    def rkhs_norm(self) -> float:
        K = gram_matrix(self.kernel, self.centers)
        return math.sqrt(max(float(self.coefficients @ K @ self.coefficients), 0.0))

    def __call__(self, x) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return float(cross_kernel(self.kernel, x[None, :], self.centers)[0] @ self.coefficients)

    def values(self, points) -> np.ndarray:
        return cross_kernel(self.kernel, points, self.centers) @ self.coefficients

    def scaled(self, factor: float) -> "RkhsFunction":
        return RkhsFunction(self.kernel, self.centers, factor * self.coefficients)


def _as_stream(seed_or_stream, stream_id: int) -> Stream:
    if isinstance(seed_or_stream, Stream):
        return seed_or_stream
    return Stream(int(seed_or_stream), stream_id)


def synthesize_rkhs(
    kernel: KernelSpec,
    domain: ActionDomain,
    n_centers: int,
    target_norm: float,
    seed,
) -> RkhsFunction:
    """Random RKHS member with norm exactly ``target_norm``.

    Centers are ``n_centers`` distinct domain points; coefficients are
    standard normal, then rescaled.  ``seed`` is an int or a :class:`Stream`.
    """
    if not 1 <= n_centers <= len(domain):
        raise InvalidParameter(f"n_centers must lie in [1, {len(domain)}]")
    if not target_norm > 0:
        raise InvalidParameter("target_norm must be positive")
    rng = _as_stream(seed, 1)
    idx = rng.sample_without_replacement(len(domain), n_centers)
    centers = domain.points[idx]
    factor = cholesky_factor(gram_matrix(kernel, centers))
    if factor.jitter_applied > MAX_SYNTHESIS_JITTER:
        raise DegenerateGram(f"center Gram needs jitter {factor.jitter_applied:g}")
    alpha = rng.normals(n_centers)
    K = gram_matrix(kernel, centers)
    norm = math.sqrt(float(alpha @ K @ alpha))
    if norm == 0.0:
        raise DegenerateGram("zero-norm coefficient draw")
    return RkhsFunction(kernel, centers, alpha * (target_norm / norm))


# ---------------------------------------------------------------------------
# Misspecification families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoMisspec:
    family = "none"
    amplitude: float = 0.0

    def values(self, points: np.ndarray, f_tilde: np.ndarray) -> np.ndarray:
        return np.zeros(points.shape[0])


@dataclass(frozen=True)
class BoundedSinusoid:
    """``m(x) = amplitude * sin(2 pi <frequency, x> + phase)``."""

    amplitude: float
    frequency: tuple[float, ...]
    phase: float = 0.0
    family = "sinusoid"

    def values(self, points, f_tilde):
        w = np.asarray(self.frequency, dtype=float)
        if w.shape[0] != points.shape[1]:
            raise InvalidParameter("frequency vector must match the domain dimension")
        return self.amplitude * np.sin(2.0 * math.pi * (points @ w) + self.phase)


@dataclass(frozen=True)
class SignPattern:
    """Independent seeded signs: ``m(x_i) = +-amplitude`` per domain point."""

    amplitude: float
    seed: int
    family = "sign"

    def values(self, points, f_tilde):
        rng = Stream(self.seed, 3)
        signs = np.array([1.0 if rng.uniform() < 0.5 else -1.0 for _ in range(points.shape[0])])
        return self.amplitude * signs


@dataclass(frozen=True)
class OptimumPenalty:
    """Subtracts ``amplitude`` at every point whose ``f_tilde`` value lies
    within ``band`` of the best-in-class optimum."""

    amplitude: float
    band: float = 0.0
    family = "optimum_penalty"

    def values(self, points, f_tilde):
        top = np.max(f_tilde)
        return np.where(f_tilde >= top - self.band, -self.amplitude, 0.0)


@dataclass(frozen=True)
class Spike:
    """True reward is zero except ``height`` at ``location`` (off the grid)."""

    height: float
    location: tuple[float, ...]
    family = "spike"

    @property
    def amplitude(self) -> float:
        return self.height

    def values(self, points, f_tilde):
        return -np.asarray(f_tilde, dtype=float)


Misspecification = Union[NoMisspec, BoundedSinusoid, SignPattern, OptimumPenalty, Spike]


# ---------------------------------------------------------------------------
# Objectives, noise, contexts
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class MisspecifiedObjective:
    """Values of ``f_tilde``, ``m`` and ``f_star`` on a finite domain."""

    domain: ActionDomain
    best_in_class: RkhsFunction
    misspec: Misspecification
    eps_true: float
    f_tilde: np.ndarray
    m: np.ndarray
    f_star: np.ndarray
    hidden_star: float = -math.inf
    hidden_tilde: float = -math.inf
    affine: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if np.max(np.abs(self.m), initial=0.0) > self.eps_true + 1e-12:
            raise InvalidParameter(
                f"misspecification {np.max(np.abs(self.m)):.6g} exceeds eps {self.eps_true:.6g}"
            )

    @property
    def optimum_star(self) -> float:
        return max(float(np.max(self.f_star)), self.hidden_star)

    @property
    def optimum_tilde(self) -> float:
        return max(float(np.max(self.f_tilde)), self.hidden_tilde)

    def argmax_tilde(self) -> int:
        return int(np.argmax(self.f_tilde))


def make_objective(
    domain: ActionDomain,
    best_in_class: RkhsFunction,
    misspec: Misspecification | None = None,
    unit_interval: bool = False,
) -> MisspecifiedObjective:
    """Build ``f_star = f_tilde + m`` on ``domain``.

    With ``unit_interval`` the best-in-class values are first mapped affinely
    into ``[eps, 1 - eps]`` so that ``f_star`` lies in ``[0, 1]``; the map is
    stored as ``affine = (offset, scale)``.
    """
    misspec = misspec or NoMisspec()
    eps = float(misspec.amplitude)
    if eps < 0:
        raise InvalidParameter("misspecification amplitude must be nonnegative")
    pts = domain.points
    f_tilde = best_in_class.values(pts)
    affine = (0.0, 1.0)
    if unit_interval:
        if eps >= 0.5:
            raise InvalidParameter("unit-interval objectives need eps < 0.5")
        lo, hi = float(np.min(f_tilde)), float(np.max(f_tilde))
        scale = (1.0 - 2.0 * eps) / (hi - lo) if hi > lo else 0.0
        offset = eps - scale * lo if hi > lo else 0.5
        f_tilde = offset + scale * f_tilde
        affine = (offset, scale)
    m = misspec.values(pts, f_tilde)
    return MisspecifiedObjective(
        domain, best_in_class, misspec, eps, f_tilde, m, f_tilde + m, affine=affine
    )


def spike_objective(
    domain: ActionDomain,
    kernel: KernelSpec,
    eps: float,
    location,
) -> MisspecifiedObjective:
    """Lower-bound construction: ``f_tilde = eps * k(z, .)`` (a bump of
    height ``2 zeta = eps`` and RKHS norm ``eps``, at least ``zeta`` on the
    region where ``k(z, .) >= 1/2``) while the true reward is 0 on the whole
    grid and ``eps`` only at the off-grid point ``z``."""
    z = np.atleast_1d(np.asarray(location, dtype=float))
    if z.shape[0] != domain.dimension:
        raise InvalidParameter("spike location must match the domain dimension")
    if np.min(np.max(np.abs(domain.points - z), axis=1)) < 1e-12:
        raise InvalidParameter("spike location must lie off the action grid")
    if kernel.family.value == "linear":
        raise InvalidParameter("spike construction needs a stationary kernel")
    bump = RkhsFunction(kernel, z[None, :], np.array([eps]))
    f_tilde = bump.values(domain.points)
    misspec = Spike(eps, tuple(float(v) for v in z))
    m = misspec.values(domain.points, f_tilde)
    return MisspecifiedObjective(
        domain,
        bump,
        misspec,
        eps,
        f_tilde,
        m,
        f_tilde + m,
        hidden_star=eps,
        hidden_tilde=bump(z),
    )


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean Gaussian noise with standard deviation ``scale``."""

    scale: float

    def __post_init__(self):
        if self.scale < 0:
            raise InvalidParameter("noise scale must be nonnegative")

    def draw(self, rng: Stream) -> float:
        return self.scale * rng.normal()


def observe(obj: MisspecifiedObjective, noise: NoiseModel, index: int, rng: Stream) -> float:
    """Noisy reward ``f_star(x) + eta`` for domain point ``index``."""
    return float(obj.f_star[index]) + noise.draw(rng)


def observe_paired(
    obj: MisspecifiedObjective, noise: NoiseModel, index: int, rng: Stream
) -> tuple[float, float]:
    """``(f_star(x) + eta, f_tilde(x) + eta)`` sharing one noise draw."""
    eta = noise.draw(rng)
    return float(obj.f_star[index]) + eta, float(obj.f_tilde[index]) + eta


@dataclass(frozen=True, eq=False)
class ContextDistribution:
    """Finite pool of action subsets drawn i.i.d. with fixed weights."""

    pool: tuple[np.ndarray, ...]
    weights: np.ndarray

    def __post_init__(self):
        pool = tuple(np.unique(np.asarray(s, dtype=np.intp)) for s in self.pool)
        w = np.asarray(self.weights, dtype=float)
        if not pool:
            raise InvalidParameter("context pool must be nonempty")
        if any(s.size == 0 for s in pool):
            raise InvalidParameter("every context must offer at least one action")
        if w.shape != (len(pool),) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise InvalidParameter("weights must be a probability vector over the pool")
        object.__setattr__(self, "pool", pool)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform_random_subsets(
        cls, domain_size: int, pool_size: int, subset_size: int, rng: Stream
    ) -> "ContextDistribution":
        pool = [rng.sample_without_replacement(domain_size, subset_size) for _ in range(pool_size)]
        return cls(tuple(pool), np.full(pool_size, 1.0 / pool_size))

    def sample(self, rng: Stream) -> np.ndarray:
        return self.pool[rng.weighted_index(self.weights)]


def sample_context(dist: ContextDistribution, rng: Stream) -> np.ndarray:
    return dist.sample(rng)


# ---------------------------------------------------------------------------
# Regret accounting
# ---------------------------------------------------------------------------


class CompensatedSum:
    """Neumaier running sum."""

    __slots__ = ("total", "_comp")

    def __init__(self):
        self.total = 0.0
        self._comp = 0.0

    def add(self, x: float) -> float:
        t = self.total + x
        if abs(self.total) >= abs(x):
            self._comp += (self.total - t) + x
        else:
            self._comp += (x - t) + self.total
        self.total = t
        return t + self._comp

    @property
    def value(self) -> float:
        return self.total + self._comp


@dataclass
class RegretTrace:
    """Per-round record of actions, rewards and both regret notions."""

    actions: list[int] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)
    inst_star: list[float] = field(default_factory=list)
    inst_tilde: list[float] = field(default_factory=list)
    cum_star: list[float] = field(default_factory=list)
    cum_tilde: list[float] = field(default_factory=list)
    optimum_star: list[float] = field(default_factory=list)
    optimum_tilde: list[float] = field(default_factory=list)
    eps_true: float = 0.0
    affine: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        self._sum_star = CompensatedSum()
        self._sum_tilde = CompensatedSum()

    def __len__(self) -> int:
        return len(self.actions)

    def record_round(
        self,
        obj: MisspecifiedObjective,
        chosen: int,
        reward: float,
        action_set: Sequence[int] | np.ndarray | None = None,
    ) -> "RegretTrace":
        if action_set is None:
            best_star, best_tilde = obj.optimum_star, obj.optimum_tilde
            if not 0 <= chosen < len(obj.f_star):
                raise ActionNotInSet(f"action {chosen} outside the domain")
        else:
            s = np.asarray(action_set, dtype=np.intp)
            if chosen not in s:
                raise ActionNotInSet(f"action {chosen} not offered this round")
            best_star = float(np.max(obj.f_star[s]))
            best_tilde = float(np.max(obj.f_tilde[s]))
        r_star = best_star - float(obj.f_star[chosen])
        r_tilde = best_tilde - float(obj.f_tilde[chosen])
        self.actions.append(int(chosen))
        self.rewards.append(float(reward))
        self.inst_star.append(r_star)
        self.inst_tilde.append(r_tilde)
        self.cum_star.append(self._sum_star.add(r_star))
        self.cum_tilde.append(self._sum_tilde.add(r_tilde))
        self.optimum_star.append(best_star)
        self.optimum_tilde.append(best_tilde)
        self.eps_true = obj.eps_true
        self.affine = obj.affine
        return self

    @property
    def regret_star(self) -> float:
        return self.cum_star[-1] if self.cum_star else 0.0

    @property
    def regret_tilde(self) -> float:
        return self.cum_tilde[-1] if self.cum_tilde else 0.0
