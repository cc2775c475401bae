"""Tests for statevector simulation, shot sampling and the stochastic noise model."""

import itertools

import numpy as np
import pytest
from scipy.linalg import expm

from circuits.builder import build_qaoa_circuit
from circuits.gates import Circuit, Gate
from conftest import random_ising
from problems.ising import IsingProblem, SpinConvention, energy_spectrum, ising_energy
from qaoa.driver import success_probability
from qaoa.params import QaoaParams
from simulator.noise import NoiseModel, simulate_noisy
from simulator.sampling import SampleSet, best_sampled, expectation_from_samples, sample
from simulator.statevector import StateVector, expectation_exact, qaoa_state_fast, simulate
from utils.error_handling import ProblemSizeError, SimulationError, ValidationError

X = np.array([[0, 1], [1, 0]], dtype=complex)


def dense_qaoa_state(p: IsingProblem, params: QaoaParams) -> np.ndarray:
    """Independent oracle: matrix exponentials of the full cost and mixer operators"""
    n = p.n
    cost = np.diag(energy_spectrum(p)).astype(complex)
    mixer = np.zeros((1 << n, 1 << n), dtype=complex)
    for q in range(n):
        # qubit q is bit q of the index, i.e. kron factor n-1-q
        factors = [X if k == n - 1 - q else np.eye(2) for k in range(n)]
        term = factors[0]
        for f in factors[1:]:
            term = np.kron(term, f)
        mixer += term
    psi = np.full(1 << n, (1 << n) ** -0.5, dtype=complex)
    for gamma, beta in zip(params.gamma, params.beta):
        psi = expm(-1j * gamma * cost) @ psi
        psi = expm(-1j * beta * mixer) @ psi
    return psi


def assert_equal_up_to_phase(a: np.ndarray, b: np.ndarray, atol: float = 1e-9):
    overlap = np.vdot(a, b)
    assert abs(overlap) == pytest.approx(1.0, abs=atol)
    np.testing.assert_allclose(a * (overlap / abs(overlap)), b, atol=atol)


def test_three_paths_agree(rng):
    """Test gate path, diagonal fast path and dense oracle on random problems"""
    for trial in range(50):
        n = int(rng.integers(1, 6))
        p = int(rng.integers(1, 4))
        problem = random_ising(rng, n)
        params = QaoaParams(rng.uniform(0, 2 * np.pi, p), rng.uniform(0, np.pi, p))

        gate_state = simulate(build_qaoa_circuit(problem, params)).amplitudes
        fast_state = qaoa_state_fast(problem, params).amplitudes
        oracle = dense_qaoa_state(problem, params)
        assert_equal_up_to_phase(gate_state, oracle)
        assert_equal_up_to_phase(fast_state, oracle)


def test_expectation_bounds_and_zero_gamma(example_ising, rng):
    """Test C(0, beta) = 0 and E_min <= C <= E_max"""
    spectrum = energy_spectrum(example_ising)
    for beta in (0.0, 0.7, np.pi):
        state = qaoa_state_fast(example_ising, QaoaParams([0.0], [beta]))
        assert expectation_exact(example_ising, state) == pytest.approx(0.0, abs=1e-12)

    for _ in range(1000):
        params = QaoaParams(rng.uniform(0, 2 * np.pi, 2), rng.uniform(0, np.pi, 2))
        value = expectation_exact(example_ising, qaoa_state_fast(example_ising, params, spectrum), spectrum)
        assert spectrum.min() - 1e-9 <= value <= spectrum.max() + 1e-9


def test_uniform_state_expectation_is_zero_for_random_problems(rng):
    """Test that the uniform superposition has zero Ising energy"""
    for _ in range(20):
        problem = random_ising(rng, int(rng.integers(1, 7)))
        state = StateVector.uniform(problem.n)
        assert expectation_exact(problem, state) == pytest.approx(0.0, abs=1e-12)


def test_mixer_period_is_pi(rng):
    """Test that beta -> beta + pi on any layer leaves probabilities and energy unchanged"""
    for _ in range(10):
        problem = random_ising(rng, int(rng.integers(2, 5)))
        gamma, beta = rng.uniform(0, 2 * np.pi, 2), rng.uniform(0, np.pi, 2)
        base = QaoaParams(gamma, beta)
        reference = qaoa_state_fast(problem, base)
        for layer in range(2):
            shifted = QaoaParams(gamma, beta + np.pi * (np.arange(2) == layer))
            np.testing.assert_allclose(qaoa_state_fast(problem, shifted).probabilities(),
                                       reference.probabilities(), atol=1e-12)
            gate_state = simulate(build_qaoa_circuit(problem, shifted, allow_unbounded=True))
            np.testing.assert_allclose(gate_state.probabilities(), reference.probabilities(), atol=1e-10)
            assert expectation_exact(problem, qaoa_state_fast(problem, shifted)) == pytest.approx(
                expectation_exact(problem, reference), abs=1e-10)


def test_sampling_distance_shrinks_with_shots(rng):
    """Test that the total-variation distance to |psi|^2 is smaller at 2^14 shots than at 2^8"""
    state = qaoa_state_fast(random_ising(rng, 3), QaoaParams([0.8], [0.5]))
    ideal = state.probabilities()

    def mean_distance(shots):
        return np.mean([0.5 * np.abs(sample(state, shots, seed).frequencies(3) - ideal).sum()
                        for seed in range(20)])

    assert mean_distance(2 ** 14) < 0.5 * mean_distance(2 ** 8)


def test_success_probability_matches_enumeration(rng):
    """Test ground-state mass on non-uniform states against enumeration of every bitstring"""
    for _ in range(10):
        n = int(rng.integers(2, 6))
        problem = random_ising(rng, n)
        params = QaoaParams(rng.uniform(0, 2 * np.pi, 1), rng.uniform(0, np.pi, 1))
        probs = np.abs(dense_qaoa_state(problem, params)) ** 2
        assert np.ptp(probs) > 1e-6
        energies = {bits: ising_energy(problem, bits) for bits in itertools.product((0, 1), repeat=n)}
        lowest = min(energies.values())
        oracle = sum(probs[SpinConvention.bits_to_index(bits)] for bits, e in energies.items()
                     if e <= lowest + 1e-9)
        assert success_probability(problem, params) == pytest.approx(oracle, abs=1e-10)


def test_single_qubit_gates():
    """Test gate conventions on one qubit"""
    one = simulate(Circuit(1, (Gate('RX', (0,), (np.pi,)),))).probabilities()
    np.testing.assert_allclose(one, [0.0, 1.0], atol=1e-12)
    plus = simulate(Circuit(1, (Gate('U2', (0,), (0.0, np.pi)),))).probabilities()
    np.testing.assert_allclose(plus, [0.5, 0.5], atol=1e-12)
    bell = simulate(Circuit(2, (Gate('H', (0,)), Gate('CNOT', (0, 1))))).probabilities()
    np.testing.assert_allclose(bell, [0.5, 0.0, 0.0, 0.5], atol=1e-12)
    swapped = simulate(Circuit(2, (Gate('RX', (0,), (np.pi,)), Gate('SWAP', (0, 1))))).probabilities()
    np.testing.assert_allclose(swapped, [0.0, 0.0, 1.0, 0.0], atol=1e-12)


def test_state_validation_and_budget():
    """Test normalization, size and qubit-limit checks"""
    with pytest.raises(SimulationError):
        StateVector(np.array([1.0, 1.0, 0.0]))
    with pytest.raises(SimulationError):
        StateVector(np.array([1.0, 1.0]))
    with pytest.raises(ProblemSizeError):
        simulate(Circuit(21))
    with pytest.raises(SimulationError):
        expectation_exact(IsingProblem(h=[1.0]), StateVector.zero(2))


def test_sampling_is_seeded_and_complete():
    """Test that counts sum to shots and a seed reproduces them"""
    state = StateVector.uniform(3)
    first = sample(state, 500, 7)
    assert first.shots == 500
    assert sum(first.counts.values()) == 500
    assert first == sample(state, 500, 7)
    assert list(first.counts) == sorted(first.counts, key=lambda s: int(s[::-1], 2))

    deterministic = sample(StateVector.zero(2), 10, 0)
    assert deterministic.counts == {'00': 10}
    with pytest.raises(ValidationError):
        sample(state, 0, 0)


def test_sample_expectation_and_best(example_ising):
    """Test the sample mean and best sampled bitstring"""
    s = SampleSet({'001': 3, '000': 1}, 4)
    # E(000) = -3.5 + 7.5 = 4, E(001) = -7
    assert expectation_from_samples(example_ising, s) == pytest.approx((3 * -7.0 + 4.0) / 4)
    assert best_sampled(example_ising, s) == ('001', pytest.approx(-7.0))
    with pytest.raises(SimulationError):
        expectation_from_samples(example_ising, SampleSet({}, 0))
    with pytest.raises(ValidationError):
        SampleSet({'0': 2}, 3)


def test_shot_mean_converges(example_ising):
    """Test that the shot estimate is unbiased within a few standard errors"""
    params = QaoaParams([0.6], [0.4])
    state = qaoa_state_fast(example_ising, params)
    exact = expectation_exact(example_ising, state)
    spectrum = energy_spectrum(example_ising)
    sigma = np.sqrt(state.probabilities() @ (spectrum - exact) ** 2)
    shots = 256
    estimates = [expectation_from_samples(example_ising, sample(state, shots, seed)) for seed in range(50)]
    assert abs(np.mean(estimates) - exact) < 5 * sigma / np.sqrt(shots * 50)


def test_zero_noise_shares_the_common_draws(example_ising):
    """Test that scale 0 equals plain sampling and shares its draws with a vanishing scale"""
    c = build_qaoa_circuit(example_ising, QaoaParams([0.6], [0.4]))
    zero = simulate_noisy(c, NoiseModel(scale=0.0), 4096, 11)
    assert zero == sample(simulate(c), 4096, 11)
    assert zero == simulate_noisy(c, NoiseModel(scale=1e-12), 4096, 11)
    ideal = simulate(c).probabilities()
    assert 0.5 * np.abs(zero.frequencies(3) - ideal).sum() < 0.05


def test_readout_noise_acts_on_the_error_free_outcomes(example_ising):
    """Test that certain readout error inverts exactly the outcomes plain sampling draws"""
    c = build_qaoa_circuit(example_ising, QaoaParams([0.6], [0.4]))
    flipped = simulate_noisy(c, NoiseModel(p1=0.0, p2=0.0, p_ro=1.0), 2000, 4)
    inverted = {''.join('1' if b == '0' else '0' for b in bits): count
                for bits, count in sample(simulate(c), 2000, 4).counts.items()}
    assert flipped.counts == inverted


def test_readout_flips():
    """Test that certain readout error inverts every bit"""
    c = Circuit(2)
    s = simulate_noisy(c, NoiseModel(p1=0.0, p2=0.0, p_ro=1.0), 50, 3)
    assert s.counts == {'11': 50}


def test_pauli_errors_after_gates():
    """Test that a certain Pauli error after an identity gate flips |0> two times in three"""
    c = Circuit(1, (Gate('U1', (0,), (0.0,)),))
    s = simulate_noisy(c, NoiseModel(p1=1.0, p2=0.0, p_ro=0.0), 3000, 5)
    assert s.counts.get('1', 0) / 3000 == pytest.approx(2.0 / 3.0, abs=0.05)


def test_noise_model_validation():
    """Test that effective rates must stay probabilities"""
    with pytest.raises(ValidationError):
        NoiseModel(scale=-1.0)
    with pytest.raises(ValidationError):
        NoiseModel(p2=0.5, scale=4.0)
    assert NoiseModel().scaled(0.5).effective == pytest.approx((0.0005, 0.01, 0.01))


def test_noise_is_seeded(example_ising):
    """Test that the noisy sampler is reproducible"""
    c = build_qaoa_circuit(example_ising, QaoaParams([0.6], [0.4]))
    nm = NoiseModel(scale=4.0)
    assert simulate_noisy(c, nm, 200, 9) == simulate_noisy(c, nm, 200, 9)
