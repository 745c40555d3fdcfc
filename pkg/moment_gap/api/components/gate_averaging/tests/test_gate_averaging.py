import math
from unittest.mock import patch

import numpy as np
import pytest

from moment_gap.api.components.gate_averaging import services
from moment_gap.api.components.gate_averaging.repository import GateSetRepository
from moment_gap.api.components.moment_space import services as moment_space
from moment_gap.exceptions import (
    GateSetError,
    InvalidArgumentError,
    NonUnitaryGateError,
    UnsupportedDistributionError,
)
from .conftest import CNOT

T_GATE = np.diag([1, np.exp(1j * np.pi / 4)])


def pair_index(p: int, q: int) -> int:
    return 4 * p + q


def invariant_pair(t: int, first: int, second: int):
    elements = moment_space.u2_invariant_basis(t)
    return elements[first], elements[second]


class TestPauliTransferMatrix:
    def test_identity(self):
        assert np.allclose(services.pauli_transfer_matrix(np.eye(4)).entries, np.eye(16))

    @pytest.mark.parametrize(
        "source,target,sign",
        [((1, 0), (2, 3), -1), ((2, 0), (1, 3), 1), ((3, 0), (3, 0), 1),
         ((0, 1), (3, 2), -1), ((0, 2), (3, 1), 1), ((0, 3), (0, 3), 1)],
    )
    def test_zz_rotation_table(self, source, target, sign):
        transfer = services.pauli_transfer_matrix(services.canonical_gate(0, 0, np.pi / 4))
        expected = np.zeros(16)
        expected[pair_index(*target)] = sign
        assert np.allclose(transfer.image(*source), expected)

    def test_swap_exchanges_labels(self):
        transfer = services.pauli_transfer_matrix(services.SWAP)
        for p in range(4):
            for q in range(4):
                assert transfer.image(p, q)[pair_index(q, p)] == pytest.approx(1.0)

    def test_orthogonal(self):
        rng = np.random.default_rng(4)
        for gate in services.haar_unitary(rng, 10):
            assert services.pauli_transfer_matrix(gate).orthogonality_defect() < 1e-12

    def test_stack_matches_single(self):
        rng = np.random.default_rng(8)
        gates = services.haar_unitary(rng, 3)
        stack = services.transfer_stack(gates)
        for gate, tensor in zip(gates, stack):
            assert np.allclose(services.pauli_transfer_matrix(gate).tensor(), tensor)

    def test_rejects_non_unitary(self):
        with pytest.raises(NonUnitaryGateError):
            services.pauli_transfer_matrix(2 * np.eye(4))


class TestCanonicalGate:
    def test_single_site_block_is_diagonal(self):
        rng = np.random.default_rng(6)
        for q, r, s in rng.uniform(-np.pi, np.pi, size=(20, 3)):
            entries = services.pauli_transfer_matrix(services.canonical_gate(q, r, s)).entries
            x = math.cos(2 * r) * math.cos(2 * s)
            y = math.cos(2 * s) * math.cos(2 * q)
            z = math.cos(2 * q) * math.cos(2 * r)
            assert np.allclose(entries[:4, :4], np.diag([1, x, y, z]))
            assert np.allclose(entries[[0, 4, 8, 12]][:, [0, 4, 8, 12]], np.diag([1, x, y, z]))

    def test_fully_entangling_point(self):
        entries = services.pauli_transfer_matrix(services.canonical_gate(np.pi / 4, np.pi / 4, np.pi / 4)).entries
        assert np.allclose(entries[:4, :4], np.diag([1, 0, 0, 0]))


class TestHaarAverage:
    def test_single_copy_identity_element(self):
        pair = invariant_pair(1, 0, 0)
        assert services.haar_m_element(1, pair, pair) == pytest.approx(1.0)

    def test_two_copy_elements(self):
        identity_omega = invariant_pair(2, 0, 1)
        omega_identity = invariant_pair(2, 1, 0)
        omega_omega = invariant_pair(2, 1, 1)
        identity_identity = invariant_pair(2, 0, 0)
        assert services.haar_m_element(2, identity_omega, identity_omega) == pytest.approx(0.2)
        assert services.haar_m_element(2, identity_omega, omega_identity) == pytest.approx(0.2)
        assert services.haar_m_element(2, omega_omega, omega_omega) == pytest.approx(0.6)
        assert services.haar_m_element(2, identity_identity, identity_omega) == pytest.approx(0.0)
        assert services.haar_m_element(2, identity_omega, omega_omega) == pytest.approx(math.sqrt(3) / 5)

    def test_invariant_basis_is_rank_two_projector(self):
        operator = services.build_local_moment_operator(services.haar_u4(), 2, "u2_invariant")
        assert operator.matrix.shape == (4, 4)
        eigenvalues = np.linalg.eigvalsh(operator.matrix)
        assert np.sum(np.abs(eigenvalues - 1) < 1e-10) == 2
        assert np.allclose(operator.matrix @ operator.matrix, operator.matrix)
        assert operator.is_swap_invariant

    def test_order_limit(self):
        pair = invariant_pair(1, 0, 0)
        with pytest.raises(UnsupportedDistributionError):
            services.haar_m_element(5, pair, pair)

    def test_rejects_basis_of_other_order(self):
        with pytest.raises(InvalidArgumentError):
            services.build_local_moment_operator(services.haar_u4(), 2, moment_space.local_basis(3, "u2_invariant"))

    @pytest.mark.parametrize("dist", [services.haar_u4(), services.finite_distribution([CNOT])])
    def test_quadrature_samples_rejected(self, dist):
        with pytest.raises(UnsupportedDistributionError):
            services.build_local_moment_operator(dist, 2, "pauli", quadrature_samples=100)

    def test_sampler_is_unitary(self):
        gates = services.haar_unitary(np.random.default_rng(1), 50)
        assert max(services.unitarity_defect(gate) for gate in gates) < 1e-12


class TestFiniteAverage:
    def test_identity_gate_gives_identity(self):
        dist = services.finite_distribution([np.eye(4)])
        operator = services.build_local_moment_operator(dist, 2, "pauli")
        assert np.allclose(operator.matrix, np.eye(256))
        restricted = services.build_local_moment_operator(dist, 2, "u2_invariant")
        assert np.allclose(restricted.matrix, np.eye(4))

    def test_cnot_average_is_an_involution(self):
        dist = services.finite_distribution([CNOT])
        assert dist.size == 1
        matrix = services.build_local_moment_operator(dist, 2).matrix
        assert np.allclose(matrix @ matrix, np.eye(256))

    def test_pair_transfer_matches_matrix(self):
        dist = services.finite_distribution([CNOT])
        matrix = services.build_local_moment_operator(dist, 2).matrix
        vector = np.random.default_rng(2).standard_normal(256)
        transfer = services.transfer_stack(CNOT[None])[0]
        assert np.allclose(services.apply_pair_transfer(transfer, vector, 2), matrix @ vector)

    def test_permutation_pairs_are_fixed(self):
        dist = services.resolve_distribution("clifford-t")
        operator = services.build_local_moment_operator(dist, 2)
        basis = operator.basis
        for sigma in moment_space.permutations_of(2):
            single = basis.coordinates(moment_space.permutation_ket(sigma, 2).ket)
            vector = np.kron(single, single)
            assert np.allclose(operator.matrix @ vector, vector)

    def test_swap_conjugation_of_cnot(self):
        control_first = services.build_local_moment_operator(services.finite_distribution([CNOT]), 2)
        control_second = services.swap_conjugate_gate(CNOT)
        both = services.build_local_moment_operator(services.finite_distribution([CNOT, control_second]), 2)
        assert not control_first.is_swap_invariant
        assert both.is_swap_invariant
        assert np.allclose(control_first.pair_symmetrized().matrix, both.matrix)

    def test_clifford_matches_haar_on_two_copies(self, clifford_gates, clifford_distribution):
        assert clifford_gates.shape[0] == 11520
        clifford = services.build_local_moment_operator(clifford_distribution, 2)
        haar = services.build_local_moment_operator(services.haar_u4(), 2)
        assert np.max(np.abs(clifford.matrix - haar.matrix)) < 1e-10

    @pytest.mark.slow
    def test_clifford_matches_haar_on_three_copies(self, clifford_distribution):
        clifford = services.build_local_moment_operator(clifford_distribution, 3, "u2_invariant")
        haar = services.build_local_moment_operator(services.haar_u4(), 3, "u2_invariant")
        assert np.max(np.abs(clifford.matrix - haar.matrix)) < 1e-10


class TestGateSets:
    def test_dagger_symmetrization_adds_inverse(self):
        gate = np.kron(T_GATE, np.eye(2))
        dist = services.finite_distribution([gate])
        assert dist.size == 2
        assert np.allclose(dist.weights, [0.5, 0.5])
        assert np.allclose(dist.gates[1], gate.conj().T)

    def test_near_identical_gates_merge_across_bucket_edge(self):
        base = np.eye(4, dtype=complex)
        value = np.real(np.vdot(services.FINGERPRINT, base))
        edge = np.ceil(value / services.BUCKET_WIDTH + 0.5) * services.BUCKET_WIDTH
        below, above = base.copy(), base.copy()
        below[0, 0] += edge - value - 1e-13
        above[0, 0] += edge - value + 1e-13
        assert services._bucket_key(below) != services._bucket_key(above)
        gates, weights = services.dagger_symmetrize(np.stack([below, above]), np.array([0.5, 0.5]))
        assert gates.shape[0] == 1
        assert weights == pytest.approx([1.0])

    def test_small_unitary_differences_stay_separate(self):
        rotations = [np.diag([np.exp(1j * angle), 1, 1, 1]) for angle in (0.3, 0.3 + 1e-9)]
        gates, _ = services.dagger_symmetrize(np.stack(rotations), np.array([0.5, 0.5]))
        assert gates.shape[0] == 4

    def test_self_inverse_gates_merge(self):
        dist = services.finite_distribution([CNOT, services.SWAP], [0.25, 0.75])
        assert dist.size == 2
        assert np.allclose(dist.weights, [0.25, 0.75])

    def test_weights_must_sum_to_one(self):
        with pytest.raises(GateSetError):
            services.finite_distribution([CNOT, np.eye(4)], [0.5, 0.6])

    def test_weights_must_be_non_negative(self):
        with pytest.raises(GateSetError):
            services.finite_distribution([CNOT, np.eye(4)], [1.5, -0.5])

    def test_rejects_non_unitary_gate(self):
        with pytest.raises(NonUnitaryGateError) as info:
            services.finite_distribution([np.eye(4), np.ones((4, 4))])
        assert info.value.index == 1

    def test_declared_symmetric_set_is_verified(self):
        with pytest.raises(GateSetError):
            services.finite_distribution([np.kron(T_GATE, np.eye(2))], symmetric=True)

    def test_builtin_clifford_t(self):
        dist = services.resolve_distribution("clifford-t")
        assert dist.name == "clifford-t"
        assert dist.size == 8
        assert dist.weights.sum() == pytest.approx(1.0)

    def test_haar_name(self):
        assert services.resolve_distribution("haar-u4").kind == "haar_u4"


class TestGateSetRepository:
    def test_reads_in_memory_document(self):
        document = b'{"name": "ident", "gates": [{"weight": 1.0, "matrix": ' + (
            b"[[[1,0],[0,0],[0,0],[0,0]],[[0,0],[1,0],[0,0],[0,0]],"
            b"[[0,0],[0,0],[1,0],[0,0]],[[0,0],[0,0],[0,0],[1,0]]]}]}"
        )
        with patch.object(GateSetRepository, "_read_bytes", return_value=document):
            dist = services.load_gate_set("ident.json")
        assert dist.name == "ident"
        assert np.allclose(dist.gates[0], np.eye(4))

    def test_invalid_json(self):
        with patch.object(GateSetRepository, "_read_bytes", return_value=b"{not json"):
            with pytest.raises(GateSetError):
                GateSetRepository().read("broken.json")

    def test_schema_violation(self):
        with patch.object(GateSetRepository, "_read_bytes", return_value=b'{"name": "empty", "gates": []}'):
            with pytest.raises(GateSetError):
                GateSetRepository().read("empty.json")

    def test_wrong_shape(self):
        document = b'{"name": "small", "gates": [{"weight": 1.0, "matrix": [[[1,0],[0,0]],[[0,0],[1,0]]]}]}'
        with patch.object(GateSetRepository, "_read_bytes", return_value=document):
            with pytest.raises(GateSetError):
                services.load_gate_set("small.json")

    def test_missing_file(self, tmp_path):
        with pytest.raises(GateSetError):
            GateSetRepository().read(str(tmp_path / "absent.json"))

    def test_builtin_names(self):
        assert GateSetRepository().builtin_names() == ["clifford-t"]
