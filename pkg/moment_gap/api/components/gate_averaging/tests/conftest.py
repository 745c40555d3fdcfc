from collections import deque

import numpy as np
import pytest

from moment_gap.api.components.gate_averaging import services
from moment_gap.api.components.gate_averaging.model import GateDistribution

HADAMARD = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
PHASE = np.diag([1, 1j])
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def _clifford_group() -> np.ndarray:
    generators = [
        np.kron(HADAMARD, np.eye(2)),
        np.kron(np.eye(2), HADAMARD),
        np.kron(PHASE, np.eye(2)),
        np.kron(np.eye(2), PHASE),
        CNOT,
    ]
    generator_transfers = [services.pauli_transfer_matrix(gate).entries for gate in generators]
    identity = np.eye(4, dtype=complex)
    seen = {np.rint(np.eye(16)).astype(np.int8).tobytes()}
    elements = [identity]
    queue = deque([(identity, np.eye(16))])
    while queue:
        gate, transfer = queue.popleft()
        for generator, generator_transfer in zip(generators, generator_transfers):
            product = generator_transfer @ transfer
            key = np.rint(product).astype(np.int8).tobytes()
            if key in seen:
                continue
            seen.add(key)
            element = generator @ gate
            elements.append(element)
            queue.append((element, product))
    return np.stack(elements)


@pytest.fixture(scope="session")
def clifford_gates() -> np.ndarray:
    return _clifford_group()


@pytest.fixture(scope="session")
def clifford_distribution(clifford_gates) -> GateDistribution:
    # closed under inverses up to global phase, which the moment operator ignores
    weights = np.full(clifford_gates.shape[0], 1.0 / clifford_gates.shape[0])
    return GateDistribution(
        kind="finite_set", name="clifford", gates=clifford_gates, weights=weights, dagger_symmetrized=True
    )
