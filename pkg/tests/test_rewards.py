import math

import numpy as np
import pytest

from planarsuite.errors import ParameterError
from planarsuite.rewards import SigmoidKind, ToleranceParams, sigmoid, tolerance

KINDS = [kind.value for kind in SigmoidKind]


class TestTolerance:
    """Test suite for the tolerance reward primitive."""

    def setup_method(self):
        self.rng = np.random.default_rng(0)

    def test_inside_bounds_is_one(self):
        assert tolerance(0.5, bounds=(0, 1)) == 1.0
        assert tolerance(0.0, bounds=(0, 1), margin=0.3) == 1.0
        assert tolerance(1.0, bounds=(0, 1), margin=0.3) == 1.0

    def test_sparse_indicator_without_margin(self):
        values = tolerance(np.array([-0.1, 0.0, 0.5, 1.0, 1.1]), bounds=(0, 1))
        np.testing.assert_array_equal(values, [0, 1, 1, 1, 0])

    def test_scalar_in_scalar_out(self):
        assert isinstance(tolerance(2.0, bounds=(0, 1), margin=1.0), float)
        assert tolerance(np.zeros(3)).shape == (3,)

    @pytest.mark.parametrize("kind", KINDS)
    def test_value_at_margin(self, kind):
        value = tolerance(2.0, bounds=(0, 1), margin=1.0, sigmoid=kind, value_at_margin=0.2)
        assert value == pytest.approx(0.2, abs=1e-9)

    @pytest.mark.parametrize("kind", KINDS)
    def test_symmetric_around_interval(self, kind):
        below = tolerance(-0.4, bounds=(0, 1), margin=0.5, sigmoid=kind)
        above = tolerance(1.4, bounds=(0, 1), margin=0.5, sigmoid=kind)
        assert below == pytest.approx(above)

    def test_infinite_bounds(self):
        assert tolerance(1e9, bounds=(0, float("inf"))) == 1.0
        assert tolerance(-1.0, bounds=(0, float("inf")), margin=1.0) == pytest.approx(0.1)

    @pytest.mark.parametrize("kind", ["linear", "cosine", "quadratic"])
    def test_finite_support_reaches_zero(self, kind):
        assert tolerance(100.0, bounds=(0, 0), margin=1.0, sigmoid=kind, value_at_margin=0.0) == 0.0

    def test_random_draws(self):
        """Output in [0, 1], exact 1 inside, monotone in distance."""
        for _ in range(10_000):
            kind = KINDS[self.rng.integers(len(KINDS))]
            lower = self.rng.uniform(-2, 2)
            upper = lower + self.rng.uniform(0, 2)
            margin = self.rng.uniform(0.01, 3)
            value_at_margin = self.rng.uniform(0.01, 0.99)
            params = dict(bounds=(lower, upper), margin=margin, sigmoid=kind, value_at_margin=value_at_margin)

            inside = self.rng.uniform(lower, upper)
            assert tolerance(inside, **params) == 1.0

            distances = np.sort(self.rng.uniform(0, 5, size=8))
            values = tolerance(upper + distances, **params)
            assert np.all((values >= 0) & (values <= 1))
            assert np.all(np.diff(values) <= 1e-12)
            assert tolerance(upper + margin, **params) == pytest.approx(value_at_margin, abs=1e-9)

    def test_rejects_inverted_bounds(self):
        with pytest.raises(ParameterError):
            tolerance(0.0, bounds=(1, 0))

    def test_rejects_negative_margin(self):
        with pytest.raises(ParameterError):
            tolerance(0.0, margin=-1.0)

    def test_rejects_unknown_sigmoid(self):
        with pytest.raises(ParameterError, match="Unknown sigmoid"):
            tolerance(0.0, margin=1.0, sigmoid="logistic")

    @pytest.mark.parametrize("value", [0.0, 1.0])
    def test_infinite_support_excludes_endpoints(self, value):
        with pytest.raises(ParameterError):
            tolerance(2.0, margin=1.0, sigmoid="gaussian", value_at_margin=value)

    def test_parameter_error_is_value_error(self):
        with pytest.raises(ValueError):
            ToleranceParams(bounds=(2.0, 1.0))


class TestSigmoid:
    """Test suite for the unit sigmoids."""

    @pytest.mark.parametrize("kind", KINDS)
    def test_one_at_zero(self, kind):
        assert sigmoid(0.0, kind, 0.1) == pytest.approx(1.0)

    def test_gaussian_closed_form(self):
        scale = math.sqrt(-2 * math.log(0.1))
        assert sigmoid(0.5, "gaussian", 0.1) == pytest.approx(math.exp(-0.5 * (0.5 * scale) ** 2))

    def test_long_tail_decays_slower_than_gaussian(self):
        assert sigmoid(3.0, "long_tail", 0.1) > sigmoid(3.0, "gaussian", 0.1)

    def test_negative_distance_rejected(self):
        with pytest.raises(ParameterError):
            sigmoid(-0.1)
