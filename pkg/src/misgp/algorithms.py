"""GP bandit algorithms behind one ``select`` / ``update`` interface.

* :class:`GpUcb` and :class:`EcGpUcb`: optimistic selection with the
  anytime radius, the latter enlarged by ``eps * sqrt(t) / sqrt(lam)``.
* :class:`PhasedUncertaintySampling`: doubling episodes of max-variance
  sampling followed by elimination with hallucinated confidence bounds.
* :class:`BalancingMaster`: regret-bound balancing over EC-GP-UCB bases
  with different misspecification guesses.

All argmax/argmin rules break ties toward the lowest index.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .confidence import (
    BetaAccumulator,
    ConfidenceParams,
    beta_from_gamma,
    enlarged_bonus,
    episode_delta,
)
from .errors import DimensionMismatch, EmptyActionSet, InactiveBase, InvalidParameter
from .kernels import ActionDomain, KernelSpec
from .posterior import PosteriorState

log = logging.getLogger(__name__)


class BanditAlgorithm(Protocol):
    name: str

    def select(self, action_set: np.ndarray | None = None) -> int: ...

    def update(self, index: int, y: float) -> None: ...


def _candidates(action_set, n: int) -> np.ndarray:
    if action_set is None:
        return np.arange(n)
    s = np.asarray(action_set, dtype=np.intp).reshape(-1)
    if s.size == 0:
        raise EmptyActionSet("no actions offered")
    return np.sort(s)


def ucb_select(mean, std, radius: float, candidates=None) -> int:
    """Index maximizing ``mean + radius * std`` over ``candidates``."""
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    cand = _candidates(candidates, mean.shape[0])
    scores = mean[cand] + radius * std[cand]
    return int(cand[int(np.argmax(scores))])


# ---------------------------------------------------------------------------
# Optimistic algorithms
# ---------------------------------------------------------------------------


class EcGpUcb:
    """GP-UCB with the confidence radius enlarged for misspecification ``eps``.

    ``eps = 0`` is plain GP-UCB.  The round counter ``t`` is this instance's
    own, so a base inside a master uses its own play count.
    """

    name = "ec_gp_ucb"

    def __init__(
        self,
        domain: ActionDomain,
        kernel: KernelSpec,
        params: ConfidenceParams,
        eps: float = 0.0,
        capacity: int = 64,
    ):
        if eps < 0:
            raise InvalidParameter("eps must be nonnegative")
        self.domain = domain
        self.kernel = kernel
        self.params = params
        self.eps = float(eps)
        self.posterior = PosteriorState(kernel, params.lam, probes=domain.points, capacity=capacity)
        self.beta_acc = BetaAccumulator(params)
        self._last_var: np.ndarray | None = None

    @property
    def t(self) -> int:
        """Index of the next round (1-based)."""
        return self.posterior.round + 1

    def radius(self) -> float:
        return self.beta_acc.beta() + enlarged_bonus(self.eps, self.t, self.params.lam)

    def scores(self) -> np.ndarray:
        var = self.posterior.probe_variance()
        self._last_var = var
        return self.posterior.probe_mean() + self.radius() * np.sqrt(var)

    def select(self, action_set=None) -> int:
        cand = _candidates(action_set, len(self.domain))
        s = self.scores()
        return int(cand[int(np.argmax(s[cand]))])

    def update(self, index: int, y: float) -> None:
        var = self._last_var if self._last_var is not None else self.posterior.probe_variance()
        self.beta_acc.record_round(float(var[index]))
        self.posterior.add_point(self.domain[index], probe_index=index)
        self.posterior.append_observation(y)
        self._last_var = None


class GpUcb(EcGpUcb):
    name = "gp_ucb"

    def __init__(self, domain, kernel, params, capacity: int = 64):
        super().__init__(domain, kernel, params, eps=0.0, capacity=capacity)


# ---------------------------------------------------------------------------
# Phased uncertainty sampling
# ---------------------------------------------------------------------------


def phased_eliminate(mean, std, beta: float) -> np.ndarray:
    """Boolean mask of actions whose UCB reaches the best LCB."""
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    lcb = mean - beta * std
    keep = mean + beta * std >= np.max(lcb)
    assert keep[int(np.argmax(lcb))], "the best-LCB action must survive"
    return keep


@dataclass(frozen=True)
class EpisodeRecord:
    episode: int
    length: int
    beta: float
    active: np.ndarray
    survivors: np.ndarray
    lcb_argmax: int


class PhasedUncertaintySampling:
    """Episodes of length 1, 2, 4, ...; inside each, query the active action
    of largest posterior variance, then eliminate using only that episode's
    observations and restart from the prior.

    Observations arrive through :meth:`update`; the episode closes when the
    last of its ``m_e`` observations is in.  A final partial episode is
    never used for elimination.

    Parameters
    ----------
    horizon : int
        Needed only to split ``delta`` across episodes when
        ``split_delta`` is set.
    """

    name = "phased_us"

    def __init__(
        self,
        domain: ActionDomain,
        kernel: KernelSpec,
        params: ConfidenceParams,
        horizon: int,
        split_delta: bool = True,
    ):
        self.domain = domain
        self.kernel = kernel
        self.params = params
        self.horizon = int(horizon)
        delta_e = episode_delta(params.delta, horizon) if split_delta else params.delta
        self.episode_params = ConfidenceParams(
            params.norm_bound, params.noise_scale, params.lam, delta_e
        )
        self.episode = 1
        self.length = 1
        self.active = np.arange(len(domain))
        self.history: list[EpisodeRecord] = []
        self._start_episode()

    def _start_episode(self) -> None:
        self.posterior = PosteriorState(
            self.kernel, self.params.lam, probes=self.domain.points, capacity=self.length
        )
        self.beta_acc = BetaAccumulator(self.episode_params)
        self.pending: list[int] = []
        self.observations: list[float] = []

    def select(self, action_set=None) -> int:
        if len(self.pending) != len(self.observations):
            raise InvalidParameter("previous query still awaits its observation")
        var = self.posterior.probe_variance()
        i = int(self.active[int(np.argmax(var[self.active]))])
        self.beta_acc.record_round(float(var[i]))
        self.posterior.add_point(self.domain[i], probe_index=i)
        self.pending.append(i)
        return i

    def update(self, index: int, y: float) -> None:
        n = len(self.observations)
        if n >= len(self.pending) or self.pending[n] != index:
            raise InvalidParameter(f"observation for action {index} does not match the pending query")
        self.observations.append(float(y))
        if len(self.observations) == self.length:
            self.end_episode(self.observations)

    def end_episode(self, observations) -> EpisodeRecord:
        ys = np.asarray(observations, dtype=float)
        if ys.shape[0] != self.length or self.posterior.round != self.length:
            raise DimensionMismatch(
                f"episode {self.episode} needs {self.length} observations, got {ys.shape[0]}"
            )
        self.posterior.set_observations(ys)
        beta = self.beta_acc.beta()
        mean = self.posterior.probe_mean()[self.active]
        std = self.posterior.probe_std()[self.active]
        keep = phased_eliminate(mean, std, beta)
        lcb_argmax = int(self.active[int(np.argmax(mean - beta * std))])
        rec = EpisodeRecord(
            self.episode, self.length, beta, self.active.copy(), self.active[keep].copy(), lcb_argmax
        )
        self.history.append(rec)
        self.active = rec.survivors
        self.length *= 2
        self.episode += 1
        self._start_episode()
        return rec


# ---------------------------------------------------------------------------
# Regret bound balancing
# ---------------------------------------------------------------------------


class CandidateBound:
    """Tabulated candidate regret bound ``R(N)``, ``N = 0..horizon``.

    ``raw(N) = 2 beta sqrt((2 lam + 1) gamma N)
    + 2 (eps_hat / sqrt(lam)) sqrt((2 lam + 1) gamma) N``, then capped at
    ``N`` and at unit increments so ``0 <= R(N) - R(N-1) <= 1``.
    """

    def __init__(self, eps_hat: float, gamma: float, beta: float, lam: float, horizon: int):
        self.eps_hat = eps_hat
        n = np.arange(horizon + 1, dtype=float)
        root = math.sqrt((2.0 * lam + 1.0) * gamma)
        raw = 2.0 * beta * root * np.sqrt(n) + 2.0 * (eps_hat / math.sqrt(lam)) * root * n
        table = np.empty(horizon + 1)
        table[0] = 0.0
        for k in range(1, horizon + 1):
            table[k] = min(raw[k], n[k], table[k - 1] + 1.0)
        self.table = table

    def __call__(self, count: int) -> float:
        if count < len(self.table):
            return float(self.table[count])
        return float(self.table[-1]) + (count - len(self.table) + 1)


@dataclass(frozen=True)
class MasterConfig:
    gamma: float
    n_bases: int
    eps_hats: tuple[float, ...]
    bounds: tuple[CandidateBound, ...] = field(repr=False)
    clamped: bool = False


def n_bases_for(horizon: int, gamma: float) -> int:
    return math.ceil(1.0 + 0.5 * math.log2(horizon / gamma**2))


def make_master_config(
    horizon: int,
    gamma: float,
    norm_bound: float,
    noise_scale: float,
    lam: float,
    delta: float,
) -> MasterConfig:
    """Number of bases, their misspecification guesses
    ``eps_hat_i = 2**(1-i) / sqrt(gamma)`` and candidate bounds."""
    if not gamma > 0:
        raise InvalidParameter("gamma must be positive")
    if horizon < 2:
        raise InvalidParameter("horizon must be at least 2")
    m = n_bases_for(horizon, gamma)
    clamped = m < 1
    if clamped:
        log.warning("base count %d < 1 for T=%d, gamma=%.4g; using a single base", m, horizon, gamma)
        m = 1
    params = ConfidenceParams(norm_bound, noise_scale, lam, delta)
    beta = beta_from_gamma(params, gamma)
    eps_hats = tuple(2.0 ** (1 - i) / math.sqrt(gamma) for i in range(1, m + 1))
    bounds = tuple(CandidateBound(e, gamma, beta, lam, horizon) for e in eps_hats)
    return MasterConfig(gamma, m, eps_hats, bounds, clamped)


def consistency_width(count: int, n_bases: int, delta: float, c: float) -> float:
    """``c * sqrt(N ln(M ln N / delta))`` with ``N`` floored at 2 inside
    the iterated logarithm."""
    if count <= 0:
        return 0.0
    inner = math.log(n_bases * math.log(max(count, 2)) / delta)
    return c * math.sqrt(count * max(inner, 0.0))


def inconsistent_bases(
    rewards: Sequence[float],
    counts: Sequence[int],
    bound_values: Sequence[float],
    active: Sequence[int],
    n_bases: int,
    delta: float,
    c: float,
) -> list[int]:
    """Active bases whose optimistic cumulative reward falls below the best
    pessimistic one."""
    widths = {i: consistency_width(counts[i], n_bases, delta, c) for i in active}
    best_lower = max(rewards[j] - widths[j] for j in active)
    return [i for i in active if rewards[i] + bound_values[i] + widths[i] < best_lower]


class BalancingMaster:
    """Plays the active base with the smallest candidate bound at its current
    play count and drops bases that fail the consistency test."""

    name = "master"

    def __init__(
        self,
        bases: Sequence[EcGpUcb],
        bounds: Sequence[CandidateBound],
        delta: float,
        c: float = 2.0,
    ):
        if len(bases) != len(bounds) or not bases:
            raise InvalidParameter("need one candidate bound per base and at least one base")
        self.bases = list(bases)
        self.bounds = list(bounds)
        self.delta = float(delta)
        self.c = float(c)
        m = len(bases)
        self.counts = [0] * m
        self.rewards = [0.0] * m
        self.active = list(range(m))
        self.last_base: int | None = None
        self.base_history: list[int] = []
        self.max_balance_gap = 0.0

    @property
    def n_bases(self) -> int:
        return len(self.bases)

    def bound_values(self) -> list[float]:
        return [self.bounds[i](self.counts[i]) for i in range(self.n_bases)]

    def choose_base(self) -> int:
        values = self.bound_values()
        return min(self.active, key=lambda i: (values[i], i))

    def select(self, action_set=None) -> int:
        i = self.choose_base()
        self.last_base = i
        return self.bases[i].select(action_set)

    def update(self, index: int, y: float, base: int | None = None) -> None:
        i = self.last_base if base is None else base
        if i is None or i not in self.active:
            raise InactiveBase(f"base {i} is not active")
        self.bases[i].update(index, y)
        self.counts[i] += 1
        self.rewards[i] += float(y)
        self.base_history.append(i)
        values = self.bound_values()
        gap = max(values[j] for j in self.active) - min(values[j] for j in self.active)
        self.max_balance_gap = max(self.max_balance_gap, gap)
        dropped = inconsistent_bases(
            self.rewards, self.counts, values, self.active, self.n_bases, self.delta, self.c
        )
        if dropped:
            self.active = [j for j in self.active if j not in dropped]
        self.last_base = None
