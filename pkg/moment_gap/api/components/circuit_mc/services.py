"""
This module estimates t-copy correlators of random all-to-all circuits by direct simulation.

The t-copy correlator <<B|M_t^k|A>> of product operators A = A_1 x ... x A_t
and B = B_1 x ... x B_t is the circuit average of prod_c tr(B_c^+ U A_c U^+),
so each replica simulates one 2^n-dimensional circuit unitary and never the
2^(nt)-dimensional copy space.

A replica may start with a twirl layer W, a uniformly random qubit relabelling
optionally followed by independent Haar U(2) rotations on every qubit. M_t
commutes with both averages, so the twirled correlator is <<B|M_t^k T|A>> with
T the projector onto the symmetric (and locally invariant) part of A. Its
decay is then carried only by eigenmodes of the exact sector matrix.

Functions:
    sample_circuit: One seeded random circuit of depth k.
    evolve_circuits: Batched circuit unitaries from pair and gate stacks.
    circuit_unitary: The dense unitary of a sampled circuit.
    circuit_correlators: prod_c Re tr(B_c^+ U A_c U^+) for a batch of unitaries.
    twirl_layer: Random relabelling and local rotations for a batch of replicas.
    moment_correlator: Replica mean and standard error at one depth.
    haar_fixed_point_value: The k -> infinity limit of the correlator.
    collective_z_operator, pauli_operator: HS-normalized test operators.
    subleading_eigenvalue, burn_in_depth: Second sector mode and the depth it is negligible from.
    fit_decay_rate: Weighted log-linear fit of the signal against depth.
    validate_decay: Correlators, fit and verdict against the exact sector gap.
"""

import asyncio
import logging
import math
from functools import reduce
from typing import List, Sequence, Tuple

import numpy as np
from scipy import stats

from moment_gap.api.components.gate_averaging import services as gate_averaging
from moment_gap.api.components.gate_averaging.model import GateDistribution
from moment_gap.api.components.moment_space import services as moment_space
from moment_gap.api.components.moment_space.model import PauliString
from moment_gap.api.components.symmetric_sector import services as symmetric_sector
from moment_gap.config.settings import Settings, get_settings
from moment_gap.exceptions import DimensionCapError, InsufficientSignalError, InvalidArgumentError
from .model import CircuitSample, CircuitStep, CorrelatorEstimate, DecayEstimate

logger = logging.getLogger(__name__)

MAX_QUBITS = 6
NORMALIZATION_TOLERANCE = 1e-10
SIGNAL_THRESHOLD = 5.0
MIN_FIT_POINTS = 4
RELATIVE_TOLERANCE = 0.1
BURN_IN_CONTAMINATION = 0.02
SPECTRUM_COUNT = 4
DEGENERACY_TOLERANCE = 1e-8
TWIRLS = ("none", "permutation", "local")


def _sample_steps(
    rng: np.random.Generator, n: int, k: int, dist: GateDistribution, size: int
) -> Tuple[np.ndarray, np.ndarray]:
    # draw order is fixed: pairs, gates, orientations
    first, second = np.triu_indices(n, 1)
    choice = rng.integers(0, first.size, size=(size, k))
    pairs = np.stack([first[choice], second[choice]], axis=-1)
    if size * k == 0:
        gates = np.zeros((size, k, 4, 4), dtype=complex)
    elif dist.kind == "haar_u4":
        gates = gate_averaging.haar_unitary(rng, size * k).reshape(size, k, 4, 4)
    else:
        gates = np.asarray(dist.gates)[rng.choice(dist.size, size=(size, k), p=dist.weights)]
    flipped = rng.random((size, k)) < 0.5
    gates = np.where(flipped[..., None, None], gate_averaging.swap_conjugate_gate(gates), gates)
    return pairs, gates


def sample_circuit(n: int, k: int, dist: GateDistribution, rng_seed: int) -> CircuitSample:
    """
    Draw k gates, each on a uniformly random pair with a uniformly random orientation.

    Parameters:
    n (int): Number of qubits, at least 2.
    k (int): Depth.
    dist (GateDistribution): Gate distribution.
    rng_seed (int): Seed; equal seeds give identical circuits.

    Returns:
    CircuitSample: The circuit with its provenance id.
    """
    if n < 2:
        raise InvalidArgumentError(f"a circuit needs at least 2 qubits, got {n}")
    if k < 0:
        raise InvalidArgumentError(f"depth must be non-negative, got {k}")
    pairs, gates = _sample_steps(np.random.default_rng(rng_seed), n, k, dist, 1)
    steps = [
        CircuitStep(pair=(int(pair[0]), int(pair[1])), gate=gate) for pair, gate in zip(pairs[0], gates[0])
    ]
    return CircuitSample(
        n=n, steps=steps, seed=rng_seed, provenance_id=f"{dist.name}:n={n}:k={k}:seed={rng_seed}"
    )


def _apply_gate(block: np.ndarray, gates: np.ndarray, first: int, second: int, n: int) -> np.ndarray:
    replicas, dim = block.shape[0], block.shape[1]
    tensor = block.reshape((replicas,) + (2,) * n + (dim,))
    tensor = np.moveaxis(tensor, [1 + first, 1 + second], [1, 2])
    shape = tensor.shape
    updated = np.matmul(gates, tensor.reshape(replicas, 4, -1)).reshape(shape)
    return np.moveaxis(updated, [1, 2], [1 + first, 1 + second]).reshape(replicas, dim, dim)


def evolve_circuits(
    pairs: np.ndarray, gates: np.ndarray, n: int, initial: np.ndarray | None = None
) -> np.ndarray:
    """
    Multiply out a batch of circuits, U = G_k ... G_1 W.

    Replicas sharing a pair at a given step are updated together.

    Parameters:
    pairs (np.ndarray): Shape (replicas, k, 2), i < j per step.
    gates (np.ndarray): Shape (replicas, k, 4, 4), first factor on qubit i.
    n (int): Number of qubits; qubit 0 is the most significant.
    initial (np.ndarray | None): W per replica, shape (replicas, 2^n, 2^n); identity by default.

    Returns:
    np.ndarray: Unitaries of shape (replicas, 2^n, 2^n).
    """
    replicas, depth = pairs.shape[0], pairs.shape[1]
    dim = 2**n
    if initial is None:
        unitaries = np.broadcast_to(np.eye(dim, dtype=complex), (replicas, dim, dim)).copy()
    else:
        unitaries = np.array(initial, dtype=complex)
        if unitaries.shape != (replicas, dim, dim):
            raise InvalidArgumentError(f"initial layer of shape {unitaries.shape}, expected {(replicas, dim, dim)}")
    codes = pairs[..., 0] * n + pairs[..., 1]
    for step in range(depth):
        for code in np.unique(codes[:, step]):
            rows = np.flatnonzero(codes[:, step] == code)
            first, second = divmod(int(code), n)
            unitaries[rows] = _apply_gate(unitaries[rows], gates[rows, step], first, second, n)
    return unitaries


def circuit_unitary(sample: CircuitSample) -> np.ndarray:
    pairs, gates = sample.arrays()
    return evolve_circuits(pairs, gates, sample.n)[0]


def twirl_layer(rng: np.random.Generator, n: int, size: int, twirl: str) -> np.ndarray | None:
    """
    Random initial layers W: a uniform qubit relabelling, then Haar U(2) on every qubit for "local".

    Parameters:
    rng (np.random.Generator): Random source; relabellings are drawn before rotations.
    n (int): Number of qubits.
    size (int): Number of replicas.
    twirl (str): "none", "permutation" or "local".

    Returns:
    np.ndarray | None: Stack of shape (size, 2^n, 2^n), or None for "none".
    """
    _check_twirl_name(twirl)
    if twirl == "none":
        return None
    dim = 2**n
    places = 2 ** (n - 1 - np.arange(n))
    bits = (np.arange(dim)[:, None] // places[None, :]) % 2
    orders = np.argsort(rng.random((size, n)), axis=1)
    # basis state x of replica r is sent to the state whose bits are x[orders[r]]
    targets = np.einsum("xrq,q->rx", bits[:, orders], places)
    layers = np.zeros((size, dim, dim), dtype=complex)
    layers[np.arange(size)[:, None], targets, np.arange(dim)[None, :]] = 1.0
    if twirl == "local":
        factors = gate_averaging.haar_unitary(rng, size * n, dimension=2).reshape(size, n, 2, 2)
        rotations = factors[:, 0]
        for qubit in range(1, n):
            side = 2 ** (qubit + 1)
            rotations = np.einsum("rab,rcd->racbd", rotations, factors[:, qubit]).reshape(size, side, side)
        layers = layers @ rotations
    return layers


def circuit_correlators(
    unitaries: np.ndarray, a_factors: Sequence[np.ndarray], b_factors: Sequence[np.ndarray]
) -> np.ndarray:
    """prod_c tr(B_c^+ U A_c U^+) per unitary, real part."""
    values = np.ones(unitaries.shape[0], dtype=complex)
    adjoints = np.conj(np.swapaxes(unitaries, -1, -2))
    for a_factor, b_factor in zip(a_factors, b_factors):
        evolved = unitaries @ a_factor @ adjoints
        values *= np.einsum("ij,rij->r", np.conj(b_factor), evolved)
    return values.real


def _check_factors(a_factors: Sequence[np.ndarray], b_factors: Sequence[np.ndarray]) -> int:
    if not a_factors or len(a_factors) != len(b_factors):
        raise InvalidArgumentError("A and B need the same, non-zero number of copy factors")
    dim = np.asarray(a_factors[0]).shape[0]
    n = int(round(np.log2(dim)))
    if 2**n != dim or n < 2:
        raise InvalidArgumentError(f"factor dimension {dim} is not 2^n with n >= 2")
    if n > MAX_QUBITS:
        raise DimensionCapError("Monte Carlo qubit count", n, MAX_QUBITS)
    for factor in list(a_factors) + list(b_factors):
        factor = np.asarray(factor)
        if factor.shape != (dim, dim):
            raise InvalidArgumentError(f"factor of shape {factor.shape}, expected {(dim, dim)}")
        norm = float(np.linalg.norm(factor))
        if abs(norm - 1.0) > NORMALIZATION_TOLERANCE:
            raise InvalidArgumentError(f"factors must have unit Hilbert-Schmidt norm, got {norm:.12g}")
    return n


def _check_twirl_name(twirl: str) -> None:
    if twirl not in TWIRLS:
        raise InvalidArgumentError(f"unknown twirl {twirl!r}, expected one of {', '.join(TWIRLS)}")


def _check_twirl(twirl: str, dist: GateDistribution) -> None:
    _check_twirl_name(twirl)
    if twirl == "local" and not dist.is_locally_invariant:
        raise InvalidArgumentError(
            f"a local twirl does not commute with the circuit average of {dist.name!r}; use 'permutation'"
        )


def _chunk_values(
    n: int,
    k: int,
    dist: GateDistribution,
    seed: int,
    stream: int,
    chunk: int,
    size: int,
    a_factors: Sequence[np.ndarray],
    b_factors: Sequence[np.ndarray],
    twirl: str = "none",
) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(stream, chunk)))
    pairs, gates = _sample_steps(rng, n, k, dist, size)
    layers = twirl_layer(rng, n, size, twirl)
    return circuit_correlators(evolve_circuits(pairs, gates, n, layers), a_factors, b_factors)


async def moment_correlator_async(
    a_factors: Sequence[np.ndarray],
    b_factors: Sequence[np.ndarray],
    k: int,
    replicas: int,
    dist: GateDistribution,
    seed: int,
    stream: int = 0,
    settings: Settings | None = None,
    twirl: str = "none",
) -> CorrelatorEstimate:
    """
    Estimate <<B|M_t^k|A>> from independent circuit replicas.

    Replicas are simulated in chunks of settings.mc_chunk_size, at most
    settings.mc_workers chunks at a time. Chunk c draws from the stream
    SeedSequence(seed, spawn_key=(stream, c)) and results are reduced in chunk
    order, so the estimate does not depend on scheduling. A twirl draws its
    layer after the circuit, so the circuits themselves do not change with it.

    Parameters:
    a_factors (Sequence[np.ndarray]): A_1..A_t on n qubits, unit HS norm.
    b_factors (Sequence[np.ndarray]): B_1..B_t on n qubits, unit HS norm.
    k (int): Depth.
    replicas (int): Number of circuits.
    dist (GateDistribution): Gate distribution.
    seed (int): Master seed.
    stream (int): Stream index, typically the position of k in a depth grid.
    settings (Settings | None): Chunking parameters.
    twirl (str): "none", "permutation", or "local" for locally invariant distributions.
        With a twirl the estimate is of <<B|M_t^k T|A>>.

    Returns:
    CorrelatorEstimate: Mean and standard error of the mean.
    """
    settings = settings or get_settings()
    n = _check_factors(a_factors, b_factors)
    _check_twirl(twirl, dist)
    if k < 0:
        raise InvalidArgumentError(f"depth must be non-negative, got {k}")
    if k == 0 and twirl == "none":
        exact = float(np.prod([np.vdot(b, a) for a, b in zip(a_factors, b_factors)]).real)
        return CorrelatorEstimate(depth=0, mean=exact, stderr=0.0, replicas=replicas)
    if replicas < 2:
        raise InvalidArgumentError(f"need at least 2 replicas for an error estimate, got {replicas}")

    sizes = [settings.mc_chunk_size] * (replicas // settings.mc_chunk_size)
    if replicas % settings.mc_chunk_size:
        sizes.append(replicas % settings.mc_chunk_size)
    semaphore = asyncio.Semaphore(settings.mc_workers)

    async def run(chunk: int, size: int) -> np.ndarray:
        async with semaphore:
            return await asyncio.to_thread(
                _chunk_values, n, k, dist, seed, stream, chunk, size, a_factors, b_factors, twirl
            )

    chunks = await asyncio.gather(*[run(chunk, size) for chunk, size in enumerate(sizes)])
    values = np.concatenate(chunks)
    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / np.sqrt(values.size))
    logger.debug("depth %d: %d replicas in %d chunks, mean %.6g +- %.2g", k, values.size, len(sizes), mean, stderr)
    return CorrelatorEstimate(depth=k, mean=mean, stderr=stderr, replicas=int(values.size))


def moment_correlator(
    a_factors: Sequence[np.ndarray],
    b_factors: Sequence[np.ndarray],
    k: int,
    replicas: int,
    dist: GateDistribution,
    seed: int,
    stream: int = 0,
    settings: Settings | None = None,
    twirl: str = "none",
) -> CorrelatorEstimate:
    return asyncio.run(
        moment_correlator_async(a_factors, b_factors, k, replicas, dist, seed, stream, settings, twirl)
    )


def haar_fixed_point_value(a_factors: Sequence[np.ndarray], b_factors: Sequence[np.ndarray]) -> float:
    """
    <<B|P|A>> with P the projector onto the span of the global permutation kets.

    This is the k -> infinity limit of the correlator for every universal
    distribution, computed from the Gram matrix of S_t on C^(2^n).
    """
    t = len(a_factors)
    group = moment_space.permutations_of(t)
    gram = moment_space.gram_matrix(t, np.asarray(a_factors[0]).shape[0])
    right = np.conj([moment_space.permutation_overlap(a_factors, sigma) for sigma in group])
    left = np.array([moment_space.permutation_overlap(b_factors, sigma) for sigma in group])
    return float(np.real(left @ np.linalg.solve(gram, right)))


def collective_z_operator(n: int) -> np.ndarray:
    """sum_i Z_i / sqrt(n 2^n), which has unit HS norm."""
    total = np.zeros((2**n, 2**n), dtype=complex)
    for site in range(n):
        total += reduce(np.kron, (moment_space.PAULIS[3 if q == site else 0] for q in range(n)))
    return total / np.sqrt(n * 2**n)


def pauli_operator(label: str) -> np.ndarray:
    """The Pauli string with one letter per qubit, divided by 2^(n/2)."""
    try:
        string = PauliString.from_label(label)
    except ValueError as exc:
        raise InvalidArgumentError(f"{label!r} is not a Pauli string over I, X, Y, Z") from exc
    matrix = reduce(np.kron, (moment_space.PAULIS[index] for index in string.labels))
    return matrix / 2 ** (string.t / 2)


def burn_in_depth(
    lambda1: float, subleading: float | None, contamination: float = BURN_IN_CONTAMINATION
) -> int:
    """
    Smallest depth at which (|lambda2| / lambda1)^k falls below ``contamination``.

    Returns 0 when there is no subleading mode or it does not decay relative to lambda1.
    """
    if subleading is None or subleading <= 0 or lambda1 <= 0:
        return 0
    ratio = abs(subleading) / lambda1
    if ratio >= 1:
        logger.warning("subleading mode %.6g is not below lambda1 %.6g; no burn-in applied", subleading, lambda1)
        return 0
    return max(0, math.ceil(math.log(contamination) / math.log(ratio)))


def fit_decay_rate(
    estimates: Sequence[CorrelatorEstimate],
    reference_rate: float | None = None,
    confidence: float | None = None,
    settings: Settings | None = None,
    burn_in: int = 0,
) -> DecayEstimate:
    """
    Fit |signal(k)| = c rho^k by weighted least squares on log|signal|.

    Depths below ``burn_in`` and depths whose |signal| does not exceed 5
    standard errors are left out. The weights are |signal| / stderr, the
    inverse standard error of log|signal|.

    Parameters:
    estimates (Sequence[CorrelatorEstimate]): One estimate per depth, signal already set.
    reference_rate (float | None): lambda1 to compare against.
    confidence (float | None): Interval level; settings.fit_confidence by default.
    settings (Settings | None): Supplies the default confidence.
    burn_in (int): First depth allowed into the fit.

    Returns:
    DecayEstimate: rho with its interval and, with a reference, the verdict.

    Raises:
    InsufficientSignalError: If fewer than 4 depths pass the filter.
    """
    confidence = confidence if confidence is not None else (settings or get_settings()).fit_confidence
    if burn_in < 0:
        raise InvalidArgumentError(f"burn-in must be non-negative, got {burn_in}")
    depths = np.array([estimate.depth for estimate in estimates], dtype=float)
    signals = np.array([estimate.signal for estimate in estimates])
    stderrs = np.array([estimate.stderr for estimate in estimates])
    magnitudes = np.abs(signals)
    usable = (magnitudes > SIGNAL_THRESHOLD * stderrs) & (magnitudes > 0) & (depths >= burn_in)
    if int(usable.sum()) < MIN_FIT_POINTS:
        raise InsufficientSignalError(int(usable.sum()), MIN_FIT_POINTS)

    x = depths[usable]
    y = np.log(magnitudes[usable])
    errors = stderrs[usable]
    if np.any(errors > 0):
        errors = np.where(errors > 0, errors, errors[errors > 0].min())
        coefficients, covariance = np.polyfit(x, y, 1, w=magnitudes[usable] / errors, cov="unscaled")
    else:
        coefficients, covariance = np.polyfit(x, y, 1, cov=True)
    slope, intercept = float(coefficients[0]), float(coefficients[1])
    rate = float(np.exp(slope))
    rate_stderr = rate * float(np.sqrt(max(covariance[0, 0], 0.0)))
    z = float(stats.norm.ppf(0.5 + confidence / 2))

    consistent = None
    if reference_rate is not None:
        allowed = max(3 * rate_stderr, RELATIVE_TOLERANCE * reference_rate)
        consistent = bool(abs(rate - reference_rate) <= allowed)
        logger.info(
            "fitted rate %.6f +- %.2g over %d depths from %d against lambda1 %.6f: %s",
            rate,
            rate_stderr,
            int(usable.sum()),
            burn_in,
            reference_rate,
            "consistent" if consistent else "inconsistent",
        )
    return DecayEstimate(
        depths=[estimate.depth for estimate in estimates],
        means=[estimate.mean for estimate in estimates],
        stderrs=stderrs.tolist(),
        signals=signals.tolist(),
        used_in_fit=usable.tolist(),
        rate=rate,
        rate_stderr=rate_stderr,
        ci_low=rate - z * rate_stderr,
        ci_high=rate + z * rate_stderr,
        confidence=confidence,
        amplitude=float(np.exp(intercept)),
        reference_rate=reference_rate,
        consistent=consistent,
        burn_in=burn_in,
    )


async def decay_estimates(
    a_factors: Sequence[np.ndarray],
    b_factors: Sequence[np.ndarray],
    depths: Sequence[int],
    replicas: int,
    dist: GateDistribution,
    seed: int,
    settings: Settings | None = None,
    twirl: str = "none",
) -> List[CorrelatorEstimate]:
    """Correlators on a depth grid with the fixed-point value subtracted, stream i for depth i."""
    reference = haar_fixed_point_value(a_factors, b_factors)
    estimates = []
    for stream, depth in enumerate(depths):
        estimate = await moment_correlator_async(
            a_factors, b_factors, depth, replicas, dist, seed, stream, settings, twirl
        )
        estimates.append(estimate.with_reference(reference))
    return estimates


def subleading_eigenvalue(leading: Sequence[float], lambda1: float) -> float | None:
    """Largest |value| among eigenvalues other than lambda1, or None if all equal lambda1."""
    others = [abs(float(value)) for value in leading if abs(float(value) - lambda1) > DEGENERACY_TOLERANCE]
    return max(others) if others else None


def validate_decay(
    dist: GateDistribution,
    t: int,
    n: int,
    depths: Sequence[int],
    replicas: int,
    seed: int,
    a_factors: Sequence[np.ndarray] | None = None,
    b_factors: Sequence[np.ndarray] | None = None,
    basis: str = "auto",
    settings: Settings | None = None,
) -> DecayEstimate:
    """
    Compare the Monte Carlo decay of a correlator with lambda1 of the exact sector.

    Each replica is twirled so the correlator lives in the sector the exact
    gap is computed in: by qubit relabelling always, and by local rotations
    as well when the sector uses the U(2)-invariant basis. Depths before the
    subleading sector mode has died down to 2% of the leading one are left
    out of the fit.

    Parameters:
    dist (GateDistribution): Gate distribution.
    t (int): Moment order.
    n (int): Number of qubits, at most 6.
    depths (Sequence[int]): Depth grid.
    replicas (int): Circuits per depth.
    seed (int): Master seed.
    a_factors (Sequence[np.ndarray] | None): Copy factors of A; collective Z on every copy by default.
    b_factors (Sequence[np.ndarray] | None): Copy factors of B; equal to A by default.
    basis (str): Local basis request for the sector computation.
    settings (Settings | None): Caps, chunking and fit confidence.

    Returns:
    DecayEstimate: The fit with its verdict, burn-in and subleading eigenvalue.
    """
    settings = settings or get_settings()
    if n > MAX_QUBITS:
        raise DimensionCapError("Monte Carlo qubit count", n, MAX_QUBITS)
    if a_factors is None:
        a_factors = [collective_z_operator(n)] * t
    b_factors = a_factors if b_factors is None else b_factors
    if len(a_factors) != t:
        raise InvalidArgumentError(f"{len(a_factors)} copy factors for t = {t}")

    kind = gate_averaging.choose_local_basis(dist, t, basis, purpose="sector")
    m_local = gate_averaging.build_local_moment_operator(dist, t, kind, settings=settings)
    matrix = symmetric_sector.assemble_symmetric_moment_matrix(m_local, n, settings=settings)
    fixed = symmetric_sector.permutation_fixed_vectors(m_local.basis, matrix.basis)
    exact = symmetric_sector.spectral_gap(matrix, fixed, settings=settings)
    leading = symmetric_sector.leading_eigenvalues(matrix, fixed, SPECTRUM_COUNT, settings)
    subleading = subleading_eigenvalue(leading, exact.lambda1)
    burn_in = burn_in_depth(exact.lambda1, subleading)
    twirl = "local" if kind == "u2_invariant" else "permutation"
    logger.info(
        "exact lambda1 %.8f, subleading %s at n = %d, t = %d; %s twirl, burn-in %d",
        exact.lambda1,
        "none" if subleading is None else f"{subleading:.8f}",
        n,
        t,
        twirl,
        burn_in,
    )

    estimates = asyncio.run(decay_estimates(a_factors, b_factors, depths, replicas, dist, seed, settings, twirl))
    fit = fit_decay_rate(estimates, reference_rate=exact.lambda1, settings=settings, burn_in=burn_in)
    return fit.model_copy(update={"subleading_rate": subleading, "twirl": twirl})
