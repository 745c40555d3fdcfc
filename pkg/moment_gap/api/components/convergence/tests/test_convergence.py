import math

import pytest

from moment_gap.api.components.convergence import services
from moment_gap.exceptions import InvalidArgumentError


class TestConvergenceTimeBound:
    def test_reference_values(self):
        result = services.convergence_time_bound(10, 2, 1e-3, gap=0.12)
        assert result.bound == 174
        assert result.sharp_bound == 163
        assert result.mode == "gap"

    def test_lambda1_input(self):
        result = services.convergence_time_bound(10, 2, 1e-3, lambda1=0.88)
        assert result.gap == pytest.approx(0.12)
        assert result.bound == 174

    def test_sharp_never_exceeds_headline(self):
        for gap in (0.01, 0.1, 0.5, 0.9):
            result = services.convergence_time_bound(8, 3, 1e-4, gap=gap)
            assert result.sharp_bound <= result.bound

    def test_unit_gap(self):
        result = services.convergence_time_bound(4, 2, 0.5, gap=1.0)
        assert result.sharp_bound == 1
        assert result.bound == math.ceil(math.log(2) + 8 * math.log(2))

    def test_asymptotic_mode(self):
        result = services.convergence_time_bound(100, 2, 1e-6, a1=1.2)
        assert result.mode == "asymptotic"
        assert result.gap == pytest.approx(0.012)
        assert result.accuracy_term == pytest.approx(100 * math.log(1e6) / 1.2)
        assert result.size_term == pytest.approx(200 * math.log(2) / 0.012)
        assert result.bound == math.ceil(result.accuracy_term + result.size_term)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"epsilon": 1.0, "gap": 0.1},
            {"epsilon": 0.0, "gap": 0.1},
            {"epsilon": 0.1, "gap": 0.0},
            {"epsilon": 0.1, "gap": 1.5},
            {"epsilon": 0.1, "lambda1": 1.0},
            {"epsilon": 0.1, "a1": 20.0},
            {"epsilon": 0.1},
            {"epsilon": 0.1, "gap": 0.1, "a1": 1.2},
        ],
    )
    def test_rejects_out_of_range(self, kwargs):
        with pytest.raises(InvalidArgumentError):
            services.convergence_time_bound(10, 2, **kwargs)
