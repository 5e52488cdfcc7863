"""Maximum information gain: exact enumeration for tiny instances and the
greedy (max-variance) approximation used everywhere else."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InstanceTooLarge, InvalidParameter
from .kernels import ActionDomain, KernelSpec, gram_matrix
from .posterior import PosteriorState

EXACT_MAX_DOMAIN = 12
EXACT_MAX_T = 8
GREEDY_FACTOR = 1.0 - 1.0 / math.e


class GammaMethod(str, Enum):
    EXACT = "ExactBruteForce"
    GREEDY = "Greedy"


@dataclass(frozen=True)
class GammaEstimate:
    value: float
    method: GammaMethod
    t: int
    lam: float
    selection: tuple[int, ...] = field(default=(), compare=False)


def information_gain(kernel: KernelSpec, points, lam: float) -> float:
    """``0.5 * ln det(I + K / lam)`` for the given (multi)set of points."""
    P = np.asarray(points, dtype=float)
    if P.size == 0:
        return 0.0
    K = gram_matrix(kernel, P)
    sign, logdet = np.linalg.slogdet(np.eye(K.shape[0]) + K / lam)
    return 0.5 * logdet


def sequential_variances(kernel: KernelSpec, points, lam: float) -> np.ndarray:
    """``sigma^2_{s-1}(x_s)`` along a query sequence."""
    state = PosteriorState(kernel, lam)
    out = []
    for x in np.asarray(points, dtype=float):
        out.append(state.variance(x))
        state.add_point(x)
    return np.array(out)


def gamma_exact(
    kernel: KernelSpec,
    domain: ActionDomain,
    t: int,
    lam: float,
    distinct: bool = False,
) -> GammaEstimate:
    """Brute-force maximum information gain over ``t`` queries.

    Enumerates multisets of domain points by default: repeated queries can
    carry more information than any set of distinct points (long
    lengthscales, low-rank kernels), and the greedy path repeats points too.
    ``distinct=True`` restricts the search to subsets.
    """
    if lam <= 0:
        raise InvalidParameter("lambda must be positive")
    n = len(domain)
    if n > EXACT_MAX_DOMAIN or t > EXACT_MAX_T:
        raise InstanceTooLarge(
            f"exact enumeration limited to |D| <= {EXACT_MAX_DOMAIN}, t <= {EXACT_MAX_T}"
        )
    if t < 0 or (distinct and t > n):
        raise InvalidParameter(f"t={t} out of range for a domain of {n} points")
    if t == 0:
        return GammaEstimate(0.0, GammaMethod.EXACT, 0, lam)
    K = gram_matrix(kernel, domain.points) / lam
    combos = itertools.combinations if distinct else itertools.combinations_with_replacement
    subsets = np.array(list(combos(range(n), t)), dtype=np.intp)
    best, best_set = -math.inf, ()
    for start in range(0, len(subsets), 4096):
        chunk = subsets[start : start + 4096]
        blocks = K[chunk[:, :, None], chunk[:, None, :]] + np.eye(t)
        _, logdets = np.linalg.slogdet(blocks)
        j = int(np.argmax(logdets))
        if logdets[j] > best:
            best, best_set = float(logdets[j]), tuple(int(i) for i in chunk[j])
    return GammaEstimate(0.5 * best, GammaMethod.EXACT, t, lam, best_set)


def gamma_greedy(kernel: KernelSpec, domain: ActionDomain, t: int, lam: float) -> GammaEstimate:
    """``t`` rounds of max-variance selection from the prior, accumulating
    ``0.5 * ln(1 + sigma^2 / lam)``.  Ties go to the lowest index; repeated
    points are allowed."""
    if lam <= 0:
        raise InvalidParameter("lambda must be positive")
    if t < 0:
        raise InvalidParameter("t must be nonnegative")
    state = PosteriorState(kernel, lam, probes=domain.points, capacity=max(t, 1))
    total = 0.0
    chosen = []
    for _ in range(t):
        var = state.probe_variance()
        i = int(np.argmax(var))
        total += 0.5 * math.log1p(var[i] / lam)
        chosen.append(i)
        state.add_point(domain[i], probe_index=i)
    return GammaEstimate(total, GammaMethod.GREEDY, t, lam, tuple(chosen))


def gamma_upper_estimate(kernel: KernelSpec, domain: ActionDomain, t: int, lam: float) -> float:
    """Greedy value inflated by ``1 / (1 - 1/e)``; by submodularity this is
    an upper bound on the true maximum."""
    return gamma_greedy(kernel, domain, t, lam).value / GREEDY_FACTOR
