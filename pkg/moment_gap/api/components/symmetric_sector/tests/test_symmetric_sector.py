import math

import numpy as np
import pytest

from moment_gap.api.components.gate_averaging import services as gate_averaging
from moment_gap.api.components.gate_averaging.model import LocalMomentOperator
from moment_gap.api.components.moment_space import services as moment_space
from moment_gap.api.components.symmetric_sector import services
from moment_gap.config.settings import Settings
from moment_gap.exceptions import BasisMismatchError, DeflationError, DimensionCapError, InvalidArgumentError

CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


@pytest.fixture(scope="module")
def haar_invariant_2():
    return gate_averaging.build_local_moment_operator(gate_averaging.haar_u4(), 2, "u2_invariant")


@pytest.fixture(scope="module")
def haar_invariant_3():
    return gate_averaging.build_local_moment_operator(gate_averaging.haar_u4(), 3, "u2_invariant")


def sector_gap(m_local, n, settings=None):
    matrix = services.assemble_symmetric_moment_matrix(m_local, n, settings=settings)
    fixed = services.permutation_fixed_vectors(m_local.basis, matrix.basis)
    return matrix, services.spectral_gap(matrix, fixed, settings=settings)


def synthetic_operator(matrix: np.ndarray, t: int = 2) -> LocalMomentOperator:
    return LocalMomentOperator(
        t=t, basis=moment_space.local_basis(t, "u2_invariant"), matrix=matrix, distribution="synthetic"
    )


class TestOccupationBasis:
    def test_small_basis_order(self):
        basis = services.occupation_basis(2, 3)
        assert [basis.state(k).occupations for k in range(basis.size)] == [(3, 0), (2, 1), (1, 2), (0, 3)]

    @pytest.mark.parametrize("local_dim,n,size", [(2, 10, 11), (5, 20, 10626), (16, 3, 816), (3, 0, 1)])
    def test_sizes(self, local_dim, n, size):
        assert services.occupation_basis(local_dim, n).size == size == services.sector_dimension(local_dim, n)

    @pytest.mark.parametrize("local_dim,n", [(4, 6), (5, 7), (1, 4)])
    def test_rank_inverts_unrank(self, local_dim, n):
        basis = services.occupation_basis(local_dim, n)
        assert np.array_equal(basis.rank_many(basis.states), np.arange(basis.size))
        for index in range(basis.size):
            assert basis.rank(basis.unrank(index)) == index

    def test_states_sum_to_n(self):
        basis = services.occupation_basis(5, 6)
        assert np.all(basis.states.sum(axis=1) == 6)
        assert len({tuple(row) for row in basis.states}) == basis.size

    def test_cap(self):
        with pytest.raises(DimensionCapError):
            services.occupation_basis(5, 20, Settings(dimension_cap=1000))

    def test_rank_rejects_wrong_total(self):
        with pytest.raises(InvalidArgumentError):
            services.occupation_basis(2, 3).rank((1, 1))


class TestProductState:
    def test_single_mode(self):
        fock = services.product_state_in_fock(np.array([1.0, 0.0]), 5)
        expected = np.zeros(6)
        expected[0] = 1
        assert np.allclose(fock, expected)

    def test_two_bosons(self):
        a, b = 0.6, 0.8j
        fock = services.product_state_in_fock(np.array([a, b]), 2)
        assert np.allclose(fock, [a * a, math.sqrt(2) * a * b, b * b])

    def test_unit_norm(self):
        rng = np.random.default_rng(3)
        vector = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        fock = services.product_state_in_fock(vector / np.linalg.norm(vector), 7)
        assert np.linalg.norm(fock) == pytest.approx(1.0)

    def test_rejects_unnormalized(self):
        with pytest.raises(InvalidArgumentError):
            services.product_state_in_fock(np.array([1.0, 1.0]), 3)

    def test_identity_is_fixed(self, haar_invariant_2):
        matrix = services.assemble_symmetric_moment_matrix(haar_invariant_2, 9)
        fock = services.product_state_in_fock(np.array([1.0, 0.0]), 9)
        assert np.allclose(matrix.matvec(fock), fock, atol=1e-9)


class TestAssembly:
    def test_two_sites_reduce_to_local_operator(self):
        local = gate_averaging.build_local_moment_operator(
            gate_averaging.finite_distribution([CNOT]), 2, "u2_invariant"
        )
        matrix = services.assemble_symmetric_moment_matrix(local, 2)
        size = local.size
        columns = []
        for occupations in matrix.basis.states:
            occupied = np.flatnonzero(occupations)
            column = np.zeros(size * size)
            if len(occupied) == 1:
                column[occupied[0] * size + occupied[0]] = 1.0
            else:
                first, second = occupied
                column[first * size + second] = column[second * size + first] = 1 / math.sqrt(2)
            columns.append(column)
        isometry = np.stack(columns, axis=1)
        assert np.allclose(matrix.to_dense(), isometry.T @ local.matrix @ isometry)

    def test_haar_two_copies_four_sites(self, haar_invariant_2):
        dense = services.assemble_symmetric_moment_matrix(haar_invariant_2, 4).to_dense()
        assert dense.shape == (5, 5)
        eigenvalues = np.linalg.eigvalsh(dense)
        assert np.sum(np.abs(eigenvalues - 1) < 1e-10) == 2
        assert eigenvalues.max() < 1 + 1e-9 and eigenvalues.min() > -1 - 1e-9

    def test_single_coefficient_counts_pairs(self):
        coefficients = np.zeros((4, 4))
        coefficients[0, 0] = 1.0
        dense = services.assemble_symmetric_moment_matrix(synthetic_operator(coefficients), 3).to_dense()
        assert dense[0, 0] == pytest.approx(1.0)
        assert dense[1, 1] == pytest.approx(2 / 6)
        assert dense[2, 2] == pytest.approx(0.0)

    def test_matches_collective_operator_form(self):
        rng = np.random.default_rng(12)
        raw = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        local = synthetic_operator(raw + raw.conj().T)
        n = 5
        matrix = services.assemble_symmetric_moment_matrix(local, n)
        coefficients = local.coefficient_tensor()
        basis = matrix.basis
        ops = {
            (alpha, beta): services.collective_operator(basis, alpha, beta).toarray()
            for alpha in range(2)
            for beta in range(2)
        }
        expected = np.zeros((basis.size, basis.size), dtype=complex)
        for alpha in range(2):
            for gamma in range(2):
                for beta in range(2):
                    for delta in range(2):
                        term = ops[alpha, beta] @ ops[gamma, delta]
                        if beta == gamma:
                            term = term - ops[alpha, delta]
                        expected += coefficients[alpha, gamma, beta, delta] * term
        assert np.allclose(matrix.to_dense(), expected / (n * (n - 1)))

    def test_hermitian(self, haar_invariant_3):
        dense = services.assemble_symmetric_moment_matrix(haar_invariant_3, 6).to_dense()
        assert np.max(np.abs(dense - dense.conj().T)) < 1e-10

    def test_basis_mismatch(self, haar_invariant_2):
        with pytest.raises(BasisMismatchError):
            services.assemble_symmetric_moment_matrix(haar_invariant_2, 4, services.occupation_basis(3, 4))

    def test_needs_two_sites(self, haar_invariant_2):
        with pytest.raises(InvalidArgumentError):
            services.assemble_symmetric_moment_matrix(haar_invariant_2, 1)

    def test_dense_cap(self, haar_invariant_2):
        with pytest.raises(DimensionCapError):
            services.assemble_symmetric_moment_matrix(haar_invariant_2, 10).to_dense(cap=5)


class TestFixedVectors:
    @pytest.mark.parametrize("n", [2, 5, 9])
    def test_permutation_products_are_fixed(self, haar_invariant_3, n):
        matrix = services.assemble_symmetric_moment_matrix(haar_invariant_3, n)
        for vector in services.permutation_fixed_vectors(haar_invariant_3.basis, matrix.basis):
            assert np.allclose(matrix.matvec(vector), vector, atol=1e-9)

    def test_fixed_under_finite_set(self):
        local = gate_averaging.build_local_moment_operator(gate_averaging.resolve_distribution("clifford-t"), 2)
        matrix = services.assemble_symmetric_moment_matrix(local, 3)
        for vector in services.permutation_fixed_vectors(local.basis, matrix.basis):
            assert np.allclose(matrix.matvec(vector), vector, atol=1e-9)


class TestSpectralGap:
    def test_two_sites_projector(self, haar_invariant_2):
        _, result = sector_gap(haar_invariant_2, 2)
        assert result.lambda1 == pytest.approx(0.0, abs=1e-12)
        assert result.gap == pytest.approx(1.0)
        assert result.method == "dense"

    def test_thirty_sites_matches_asymptotics(self, haar_invariant_2):
        n = 30
        _, result = sector_gap(haar_invariant_2, n)
        assert result.unit_multiplicity == 2
        assert abs(result.gap * 5 * n / 6 - 1) <= 0.05

    def test_iterative_path_agrees_with_dense(self, haar_invariant_2):
        _, dense = sector_gap(haar_invariant_2, 30)
        _, iterative = sector_gap(haar_invariant_2, 30, Settings(dense_threshold=10))
        assert iterative.method == "iterative"
        assert iterative.gap == pytest.approx(dense.gap, abs=1e-9)
        assert iterative.residual < 1e-8

    def test_rejects_vector_that_is_not_fixed(self, haar_invariant_2):
        matrix = services.assemble_symmetric_moment_matrix(haar_invariant_2, 6)
        rng = np.random.default_rng(0)
        with pytest.raises(DeflationError) as info:
            services.spectral_gap(matrix, [rng.standard_normal(matrix.dimension)])
        assert info.value.index == 0

    def test_full_and_invariant_bases_agree(self, haar_invariant_2):
        full = gate_averaging.build_local_moment_operator(gate_averaging.haar_u4(), 2, "pauli")
        for n in (2, 3):
            _, restricted = sector_gap(haar_invariant_2, n)
            _, unrestricted = sector_gap(full, n)
            assert unrestricted.gap == pytest.approx(restricted.gap, abs=1e-9)

    @pytest.mark.slow
    @pytest.mark.parametrize("n", [4, 5, 6])
    def test_full_and_invariant_bases_agree_beyond_three_sites(self, haar_invariant_2, n):
        full = gate_averaging.build_local_moment_operator(gate_averaging.haar_u4(), 2, "pauli")
        _, restricted = sector_gap(haar_invariant_2, n)
        matrix, unrestricted = sector_gap(full, n)
        assert matrix.dimension == math.comb(16 + n - 1, n)
        assert unrestricted.gap == pytest.approx(restricted.gap, abs=1e-8)

    def test_leading_eigenvalues_by_magnitude(self, haar_invariant_2):
        matrix, result = sector_gap(haar_invariant_2, 4)
        fixed = services.permutation_fixed_vectors(haar_invariant_2.basis, matrix.basis)
        values = services.leading_eigenvalues(matrix, fixed, 4)
        assert values.size == 3
        assert values[0] == pytest.approx(result.lambda1, abs=1e-10)
        assert values[1] == pytest.approx(0.5, abs=1e-10)
        assert np.all(np.diff(np.abs(values)) <= 1e-12)
        assert np.sum(values) == pytest.approx(np.trace(matrix.to_dense()) - 2.0, abs=1e-10)

    def test_leading_eigenvalues_iterative_matches_dense(self, haar_invariant_2):
        matrix, _ = sector_gap(haar_invariant_2, 12)
        fixed = services.permutation_fixed_vectors(haar_invariant_2.basis, matrix.basis)
        dense = services.leading_eigenvalues(matrix, fixed, 3)
        iterative = services.leading_eigenvalues(matrix, fixed, 3, Settings(dense_threshold=4))
        assert iterative == pytest.approx(dense, abs=1e-8)

    def test_leading_eigenvalues_rejects_zero_count(self, haar_invariant_2):
        matrix, _ = sector_gap(haar_invariant_2, 3)
        fixed = services.permutation_fixed_vectors(haar_invariant_2.basis, matrix.basis)
        with pytest.raises(InvalidArgumentError):
            services.leading_eigenvalues(matrix, fixed, 0)

    def test_powers_converge_at_gap_rate(self, haar_invariant_2):
        matrix, result = sector_gap(haar_invariant_2, 6)
        fixed = services.permutation_fixed_vectors(haar_invariant_2.basis, matrix.basis)
        vector = np.random.default_rng(1).standard_normal(matrix.dimension)
        distances = services.power_convergence(matrix, vector, 50, fixed)
        bounds = result.lambda1 ** np.arange(51) * np.linalg.norm(vector)
        assert np.all(distances <= bounds + 1e-10)

    @pytest.mark.slow
    def test_three_copies_twenty_sites(self, haar_invariant_3):
        n = 20
        _, result = sector_gap(haar_invariant_3, n)
        assert result.dimension == 10626
        assert result.method == "iterative"
        assert result.unit_multiplicity == 6
        assert abs(result.gap / (6 / (5 * n)) - 1) <= 0.1


class TestBruteForce:
    def test_sector_spectrum_is_contained(self, haar_invariant_2):
        n = 3
        full = np.linalg.eigvalsh(services.brute_force_moment_operator(haar_invariant_2, n))
        sector = np.linalg.eigvalsh(services.assemble_symmetric_moment_matrix(haar_invariant_2, n).to_dense())
        for value in sector:
            assert np.min(np.abs(full - value)) < 1e-9

    @pytest.mark.slow
    def test_sector_spectrum_is_contained_in_full_moment_space(self):
        local = gate_averaging.build_local_moment_operator(gate_averaging.haar_u4(), 2, "pauli")
        full = np.linalg.eigvalsh(services.brute_force_moment_operator(local, 3))
        sector = np.linalg.eigvalsh(services.assemble_symmetric_moment_matrix(local, 3).to_dense())
        for value in sector:
            assert np.min(np.abs(full - value)) < 1e-9

    def test_cap(self, haar_invariant_2):
        with pytest.raises(DimensionCapError):
            services.brute_force_moment_operator(haar_invariant_2, 4, Settings(brute_force_cap=8))
