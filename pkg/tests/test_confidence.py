import math

import pytest

from misgp.confidence import BetaAccumulator, ConfidenceParams, beta_from_gamma, beta_value, enlarged_bonus, episode_delta
from misgp.errors import InvalidParameter


class TestBetaAccumulator:
    def params(self, B=1.0, delta=math.exp(-2)):
        return ConfidenceParams(norm_bound=B, noise_scale=1.0, lam=1.0, delta=delta)

    def test_record_zero_is_noop(self):
        acc = BetaAccumulator(self.params()).record_round(0.0)
        assert acc.log_det_sum == 0.0

    def test_record_unit_variance(self):
        acc = BetaAccumulator(self.params()).record_round(1.0)
        assert acc.log_det_sum == pytest.approx(0.693147, abs=1e-6)
        acc.record_round(1.0)
        assert acc.log_det_sum == pytest.approx(2 * math.log(2))

    def test_negative_variance_rejected(self):
        with pytest.raises(InvalidParameter):
            BetaAccumulator(self.params()).record_round(-0.1)

    def test_empty_sum(self):
        assert BetaAccumulator(self.params()).beta() == pytest.approx(3.0)

    def test_delta_near_one_gives_norm_bound(self):
        acc = BetaAccumulator(self.params(B=0.7, delta=1.0 - 1e-15))
        assert acc.beta() == pytest.approx(0.7, abs=1e-6)

    def test_one_round(self):
        acc = BetaAccumulator(self.params(B=0.0)).record_round(1.0)
        assert acc.beta() == pytest.approx(math.sqrt(4 + math.log(2)))
        assert acc.beta() == pytest.approx(2.166, abs=1e-3)

    def test_reset(self):
        acc = BetaAccumulator(self.params()).record_round(1.0)
        acc.reset()
        assert acc.beta() == pytest.approx(3.0)

    def test_gamma_form_uses_twice_gamma(self):
        p = self.params()
        assert beta_from_gamma(p, 0.5) == pytest.approx(beta_value(p, 1.0))

    @pytest.mark.parametrize("field,value", [("norm_bound", -1.0), ("noise_scale", 0.0), ("lam", 0.0), ("delta", 0.0), ("delta", 1.5)])
    def test_invalid_params(self, field, value):
        kw = dict(norm_bound=1.0, noise_scale=1.0, lam=1.0, delta=0.1)
        kw[field] = value
        with pytest.raises(InvalidParameter):
            ConfidenceParams(**kw)


class TestEnlargedBonus:
    @pytest.mark.parametrize("eps,t,lam,expected", [(0.0, 10, 1.0, 0.0), (0.5, 4, 1.0, 1.0), (1.0, 1, 4.0, 0.5)])
    def test_values(self, eps, t, lam, expected):
        assert enlarged_bonus(eps, t, lam) == pytest.approx(expected)

    def test_invalid(self):
        with pytest.raises(InvalidParameter):
            enlarged_bonus(-0.1, 1, 1.0)
        with pytest.raises(InvalidParameter):
            enlarged_bonus(0.1, 0, 1.0)


def test_episode_delta():
    assert episode_delta(0.1, 4096) == pytest.approx(0.1 / 13)
    assert episode_delta(0.1, 1) == pytest.approx(0.1)
