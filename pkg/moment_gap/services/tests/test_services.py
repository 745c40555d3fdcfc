import re
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from unittest.mock import patch

import numpy as np
import orjson
import pytest
from scipy.sparse.linalg import ArpackNoConvergence, aslinearoperator

from moment_gap.config.settings import Settings
from moment_gap.exceptions import ConvergenceError, InvalidArgumentError, ToleranceError
from moment_gap.services import eigensolver, linalg, output
from moment_gap.services.helper import parse_int_range


class TestParseIntRange:
    @pytest.mark.parametrize(
        "text,expected",
        [("4..8", [4, 5, 6, 7, 8]), ("4..10:3", [4, 7, 10]), ("9,3,3", [3, 9]), ("1..3, 7", [1, 2, 3, 7])],
    )
    def test_forms(self, text, expected):
        assert parse_int_range(text) == expected

    @pytest.mark.parametrize("text", ["", "a..b", "8..4", "1..4:0", ","])
    def test_rejects(self, text):
        with pytest.raises(InvalidArgumentError):
            parse_int_range(text)


class TestOutput:
    def test_format_number(self):
        assert output.format_number(0.1) == "0.10000000000000001"
        assert output.format_number(np.float64(1.2)) == "1.2"
        assert output.format_number(np.int64(7)) == "7"
        assert output.format_number(True) == "true"
        assert output.format_number(None) == ""
        assert output.format_number(float("nan")) == "nan"
        assert output.format_number(float("inf")) == "inf"

    def test_write_csv(self, tmp_path):
        path = tmp_path / "nested" / "rows.csv"
        output.write_csv(path, ["n", "gap"], [{"n": 2, "gap": 1.0, "extra": 5}, {"n": 3, "gap": 1 / 3}])
        assert path.read_text(encoding="utf-8").splitlines() == ["n,gap", "2,1", "3,0.33333333333333331"]

    def test_json_handles_numpy_and_complex(self):
        payload = orjson.loads(output.dump_json({"b": np.float64(0.5), "a": 1 + 2j, "c": np.arange(2)}))
        assert payload == {"a": [1.0, 2.0], "b": 0.5, "c": [0, 1]}

    def test_json_sorted_keys(self):
        assert output.dump_json({"b": 1, "a": 2}).index(b'"a"') < output.dump_json({"b": 1, "a": 2}).index(b'"b"')


class TestLinalg:
    def test_hermitize_corrects_small_asymmetry(self):
        matrix = np.array([[1.0, 2.0 + 1e-10], [2.0, 3.0]])
        asymmetry = linalg.hermitize_inplace(matrix, block=1)
        assert asymmetry == pytest.approx(1e-10)
        assert matrix[0, 1] == matrix[1, 0]

    def test_hermitize_rejects_large_asymmetry(self):
        with pytest.raises(ToleranceError):
            linalg.hermitize_inplace(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_phase_fix(self):
        fixed = linalg.phase_fix(np.array([0.1j, -2j]))
        assert fixed[1] == pytest.approx(2.0)
        assert fixed[0] == pytest.approx(-0.1)

    def test_orthonormal_complement(self):
        vectors = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        complement = linalg.orthonormal_complement(vectors)
        assert complement.shape == (3, 1)
        assert np.allclose(vectors.T @ complement, 0)

    def test_realify(self):
        assert not np.iscomplexobj(linalg.realify(np.array([1 + 1e-14j])))
        assert np.iscomplexobj(linalg.realify(np.array([1 + 1e-3j])))


@pytest.fixture
def deflated_problem():
    rng = np.random.default_rng(3)
    basis, _ = np.linalg.qr(rng.standard_normal((60, 60)))
    values = np.concatenate([[1.0, 1.0], np.linspace(-0.5, 0.8, 58)])
    matrix = (basis * values) @ basis.T
    return matrix, basis[:, :2]


class TestDeflatedEigensolver:
    def test_dense(self, deflated_problem):
        matrix, fixed = deflated_problem
        pair = eigensolver.DeflatedEigensolver(Settings()).largest_dense(matrix, fixed)
        assert pair.value == pytest.approx(0.8, abs=1e-12)
        assert pair.multiplicity == 1
        assert pair.residual < 1e-10

    def test_iterative_matches_dense(self, deflated_problem):
        matrix, fixed = deflated_problem
        solver = eigensolver.DeflatedEigensolver(Settings())
        dense = solver.largest_dense(matrix, fixed)
        iterative = solver.largest_iterative(aslinearoperator(matrix), fixed)
        assert iterative.value == pytest.approx(dense.value, abs=1e-9)
        assert iterative.method == "iterative"

    def test_negative_spectrum(self):
        matrix = np.diag([1.0, -0.3, -0.6, -0.9])
        fixed = np.eye(4)[:, :1]
        pair = eigensolver.DeflatedEigensolver(Settings()).largest_dense(matrix, fixed)
        assert pair.value == pytest.approx(-0.3)

    def test_whole_space_deflated(self):
        with pytest.raises(InvalidArgumentError):
            eigensolver.DeflatedEigensolver(Settings()).largest_dense(np.eye(3), np.eye(3))

    def test_spectrum_on_complement(self, deflated_problem):
        matrix, fixed = deflated_problem
        values = eigensolver.DeflatedEigensolver(Settings()).spectrum_dense(matrix, fixed)
        assert values == pytest.approx(np.linspace(-0.5, 0.8, 58), abs=1e-10)

    def test_leading_iterative_orders_by_magnitude(self, deflated_problem):
        matrix, fixed = deflated_problem
        leading = eigensolver.DeflatedEigensolver(Settings()).leading_iterative(aslinearoperator(matrix), fixed, 3)
        assert leading == pytest.approx(np.linspace(-0.5, 0.8, 58)[::-1][:3], abs=1e-8)

    def test_leading_iterative_prefers_large_negative(self):
        matrix = np.diag([1.0, 0.2, -0.7, 0.1, 0.05, -0.01])
        leading = eigensolver.DeflatedEigensolver(Settings()).leading_iterative(
            aslinearoperator(matrix), np.eye(6)[:, :1], 2
        )
        assert leading == pytest.approx([-0.7, 0.2], abs=1e-10)

    def test_spectrum_of_fully_deflated_space(self):
        with pytest.raises(InvalidArgumentError):
            eigensolver.DeflatedEigensolver(Settings()).spectrum_dense(np.eye(3), np.eye(3))

    def test_retries_then_fails(self, deflated_problem):
        matrix, fixed = deflated_problem
        failure = ArpackNoConvergence("no convergence", np.array([]), np.zeros((60, 0)))
        solver = eigensolver.DeflatedEigensolver(Settings(eigsh_attempts=2, eigsh_ncv=8))
        with patch.object(eigensolver, "eigsh", side_effect=failure) as mocked:
            with pytest.raises(ConvergenceError):
                solver.largest_iterative(aslinearoperator(matrix), fixed)
        assert mocked.call_count == 2
        assert mocked.call_args_list[1].kwargs["ncv"] == 2 * mocked.call_args_list[0].kwargs["ncv"]


class TestManifest:
    IMPORT_NAMES = {"pyyaml": "yaml", "python-dotenv": "dotenv"}

    def test_runtime_dependencies_are_imported(self):
        root = Path(__file__).resolve().parents[3]
        manifest = tomllib.loads((root / "pyproject.toml").read_text(encoding="utf-8"))
        declared = set(manifest["tool"]["poetry"]["dependencies"]) - {"python"}
        source = "\n".join(path.read_text(encoding="utf-8") for path in (root / "moment_gap").rglob("*.py"))
        unused = [
            name
            for name in sorted(declared)
            if not re.search(rf"^\s*(import|from) {self.IMPORT_NAMES.get(name, name)}\b", source, re.MULTILINE)
        ]
        assert unused == []
