from unittest.mock import patch

import pytest

from moment_gap.api.components.gate_averaging import services as gate_averaging
from moment_gap.api.components.selftest import services
from moment_gap.exceptions import InvalidArgumentError, ToleranceError


class TestChecks:
    def test_rotation_table(self):
        check = services.rotation_table_check()
        assert check.passed
        assert check.value < 1e-12

    def test_fixed_points_two_copies(self):
        check = services.fixed_point_check(2)
        assert check.passed
        assert "[2]" in check.detail

    def test_fixed_points_three_copies(self):
        assert services.fixed_point_check(3).passed

    def test_brute_force_spectrum(self):
        check = services.brute_force_check(2)
        assert check.passed
        assert check.value <= 1e-9

    def test_polynomial_bound_saturated_at_two_copies(self):
        check = services.polynomial_bound_check(2, points=5)
        assert check.passed
        assert abs(check.value) <= 1e-10

    def test_polynomial_bound_three_copies(self):
        assert services.polynomial_bound_check(3, points=4).passed

    def test_leading_coefficient_of_gate_set(self):
        check = services.leading_coefficient_check(gate_averaging.resolve_distribution("clifford-t"))
        assert check.passed
        assert check.detail == "clifford-t"

    def test_identity_gate_set_fails(self):
        identity = gate_averaging.finite_distribution([[[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]])
        assert not services.leading_coefficient_check(identity).passed

    @pytest.mark.parametrize("generator", ["zz", "xx"])
    def test_witness(self, generator):
        check = services.witness_check(generator)
        assert check.passed
        assert check.detail == ""


class TestPropertySuite:
    def test_rejects_order(self):
        with pytest.raises(InvalidArgumentError):
            services.run_property_suite(5)

    def test_error_becomes_failed_check(self):
        with patch.object(services, "rotation_table_check", side_effect=ToleranceError("table", 1.0, 1e-12)):
            check = services._guarded("rotation_table", None, services.rotation_table_check)
        assert not check.passed
        assert "table" in check.detail

    @pytest.mark.slow
    def test_full_suite(self):
        report = services.run_property_suite(3)
        assert report.passed, [check.name for check in report.failures]
        names = {check.name for check in report.checks}
        assert {"rotation_table", "fixed_points", "brute_force_spectrum", "polynomial_bound", "t_independence"} <= names
