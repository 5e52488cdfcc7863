"""Anytime confidence radii for RKHS functions and the misspecification
bonus added to them."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidParameter


@dataclass(frozen=True)
class ConfidenceParams:
    """``norm_bound`` is the RKHS norm bound B, ``noise_scale`` the
    sub-Gaussian scale sigma, ``lam`` the regularizer, ``delta`` the failure
    probability."""

    norm_bound: float
    noise_scale: float
    lam: float
    delta: float

    def __post_init__(self):
        if not self.norm_bound >= 0:
            raise InvalidParameter("norm_bound must be nonnegative")
        for name in ("noise_scale", "lam"):
            if not getattr(self, name) > 0:
                raise InvalidParameter(f"{name} must be positive")
        if not 0 < self.delta < 1:
            raise InvalidParameter(f"delta must lie in (0, 1), got {self.delta}")


def beta_value(params: ConfidenceParams, log_det_sum: float) -> float:
    """``(sigma / sqrt(lam)) * sqrt(2 ln(1/delta) + log_det_sum) + B``."""
    inner = 2.0 * math.log(1.0 / params.delta) + log_det_sum
    return params.noise_scale / math.sqrt(params.lam) * math.sqrt(inner) + params.norm_bound


def beta_from_gamma(params: ConfidenceParams, gamma: float) -> float:
    """Radius written in terms of an information gain: the running log-det
    sum equals twice the gain collected so far."""
    return (
        params.noise_scale
        / math.sqrt(params.lam)
        * math.sqrt(2.0 * math.log(1.0 / params.delta) + 2.0 * gamma)
        + params.norm_bound
    )


class BetaAccumulator:
    """Running ``sum ln(1 + sigma^2_{t'-1}(x_t') / lam)`` over queried points.

    Record each round's predictive variance at the chosen point *before*
    that point enters the posterior.
    """

    def __init__(self, params: ConfidenceParams):
        self.params = params
        self.log_det_sum = 0.0
        self.rounds_seen = 0

    def record_round(self, predictive_variance: float) -> "BetaAccumulator":
        if predictive_variance < 0:
            raise InvalidParameter(f"negative predictive variance {predictive_variance}")
        self.log_det_sum += math.log1p(predictive_variance / self.params.lam)
        self.rounds_seen += 1
        return self

    def beta(self) -> float:
        return beta_value(self.params, self.log_det_sum)

    def reset(self) -> None:
        self.log_det_sum = 0.0
        self.rounds_seen = 0


def enlarged_bonus(eps: float, t: int, lam: float) -> float:
    """Extra radius ``eps * sqrt(t) / sqrt(lam)`` absorbing the bias of a mean
    fitted to misspecified observations."""
    if eps < 0:
        raise InvalidParameter(f"eps must be nonnegative, got {eps}")
    if t < 1:
        raise InvalidParameter(f"t must be at least 1, got {t}")
    return eps * math.sqrt(t) / math.sqrt(lam)


def episode_delta(delta: float, horizon: int) -> float:
    """Per-episode failure probability for a doubling schedule over
    ``horizon`` rounds, so that a union bound over episodes gives ``delta``."""
    episodes = math.ceil(math.log2(max(horizon, 1))) + 1
    return delta / episodes
