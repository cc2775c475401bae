# simulator/statevector.py
"""
Dense statevector simulation.

Bit j of a basis-state index is the measured value of qubit j. Gates are
applied in place on a complex vector of length 2^n; single-qubit gates go
through a (high, 2, low) reshape, CNOT and SWAP are index permutations.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from circuits.gates import Circuit, Gate
from problems.ising import IsingProblem, energy_spectrum
from qaoa.params import QaoaParams
from utils.error_handling import ProblemSizeError, SimulationError

logger = logging.getLogger('qlslab.simulator')

MAX_QUBITS = 20
NORM_TOL = 1e-9

PAULI = {
    1: np.array([[0, 1], [1, 0]], dtype=complex),
    2: np.array([[0, -1j], [1j, 0]], dtype=complex),
    3: np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        size = amps.shape[0] if amps.ndim == 1 else 0
        if size == 0 or size & (size - 1):
            raise SimulationError(f"state length must be a power of two, got shape {amps.shape}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise SimulationError(f"state is not normalized (norm^2 = {norm})")
        object.__setattr__(self, 'amplitudes', amps)

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.shape[0].bit_length() - 1

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @classmethod
    def zero(cls, n: int) -> 'StateVector':
        amps = np.zeros(1 << n, dtype=complex)
        amps[0] = 1.0
        return cls(amps)

    @classmethod
    def uniform(cls, n: int) -> 'StateVector':
        return cls(np.full(1 << n, (1 << n) ** -0.5, dtype=complex))


def gate_matrix(gate: Gate) -> np.ndarray:
    """2x2 unitary of a single-qubit gate"""
    kind = gate.kind
    if kind == 'H':
        return np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
    if kind == 'RX':
        c, s = np.cos(gate.params[0] / 2), np.sin(gate.params[0] / 2)
        return np.array([[c, -1j * s], [-1j * s, c]])
    if kind == 'RZ':
        half = gate.params[0] / 2
        return np.diag([np.exp(-1j * half), np.exp(1j * half)])
    if kind == 'U1':
        return np.diag([1.0, np.exp(1j * gate.params[0])]).astype(complex)
    if kind in ('U2', 'U3'):
        if kind == 'U2':
            theta, phi, lam = np.pi / 2, gate.params[0], gate.params[1]
        else:
            theta, phi, lam = gate.params
        c, s = np.cos(theta / 2), np.sin(theta / 2)
        return np.array([[c, -np.exp(1j * lam) * s],
                         [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c]])
    raise SimulationError(f"{kind} is not a single-qubit gate")


def apply_single(psi: np.ndarray, matrix: np.ndarray, qubit: int, n: int) -> np.ndarray:
    view = psi.reshape(1 << (n - 1 - qubit), 2, 1 << qubit)
    return np.einsum('ij,ajb->aib', matrix, view).reshape(-1)


def apply_gate(psi: np.ndarray, gate: Gate, n: int) -> np.ndarray:
    if gate.n_qubits == 1:
        return apply_single(psi, gate_matrix(gate), gate.targets[0], n)
    index = np.arange(psi.shape[0], dtype=np.int64)
    a, b = gate.targets
    if gate.kind == 'CNOT':
        perm = index ^ (((index >> a) & 1) << b)
    elif gate.kind == 'SWAP':
        diff = ((index >> a) ^ (index >> b)) & 1
        perm = index ^ (diff << a) ^ (diff << b)
    else:
        raise SimulationError(f"unsupported two-qubit gate {gate.kind}")
    return psi[perm]


def check_qubit_budget(n: int) -> None:
    if n > MAX_QUBITS:
        raise ProblemSizeError(f"{n} qubits exceeds the statevector limit of {MAX_QUBITS}",
                               n=n, limit=MAX_QUBITS)


def simulate(c: Circuit, initial_state: Optional[StateVector] = None) -> StateVector:
    """Exact final state of `c` applied to |0...0> (or `initial_state`)."""
    n = c.n_qubits
    check_qubit_budget(n)
    if initial_state is None:
        psi = StateVector.zero(n).amplitudes.copy()
    else:
        if initial_state.n_qubits != n:
            raise SimulationError(f"initial state has {initial_state.n_qubits} qubits, circuit has {n}",
                                  n_qubits=n)
        psi = initial_state.amplitudes.copy()
    for gate in c.gates:
        psi = apply_gate(psi, gate, n)
    return StateVector(psi)


def qaoa_state_fast(p_ising: IsingProblem, params: QaoaParams,
                    energies: Optional[np.ndarray] = None) -> StateVector:
    """
    QAOA state via diagonal phases: each layer multiplies amplitude z by
    exp(-i gamma E(z)) and then applies RX(2 beta) on every qubit.

    Args:
        p_ising: Cost function
        params: Layer angles (not bounds-checked)
        energies: Precomputed `energy_spectrum(p_ising)`, reused across calls

    Returns:
        StateVector equal to the gate-path state up to a global phase
    """
    n = p_ising.n
    check_qubit_budget(n)
    if energies is None:
        energies = energy_spectrum(p_ising)
    psi = StateVector.uniform(n).amplitudes.copy()
    for gamma, beta in zip(params.gamma, params.beta):
        psi *= np.exp(-1j * gamma * energies)
        c, s = np.cos(beta), np.sin(beta)
        mixer = np.array([[c, -1j * s], [-1j * s, c]])
        for q in range(n):
            psi = apply_single(psi, mixer, q, n)
    return StateVector(psi)


def expectation_exact(p_ising: IsingProblem, state: StateVector,
                      energies: Optional[np.ndarray] = None) -> float:
    """<psi|C|psi> with the Ising offset excluded."""
    if state.n_qubits != p_ising.n:
        raise SimulationError(f"state has {state.n_qubits} qubits, problem has {p_ising.n}",
                              n_qubits=state.n_qubits)
    if energies is None:
        energies = energy_spectrum(p_ising)
    return float(state.probabilities() @ energies)
