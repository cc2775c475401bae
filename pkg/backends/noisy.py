# backends/noisy.py
import logging
from typing import Optional

from circuits.basis import rewrite_basis
from circuits.builder import build_qaoa_circuit
from circuits.coupling import CouplingMap
from circuits.gates import Circuit
from circuits.routing import route
from problems.ising import IsingProblem
from qaoa.params import QaoaParams
from simulator.noise import NoiseModel, simulate_noisy
from simulator.sampling import SampleSet, expectation_from_samples
from utils.error_handling import ValidationError
from backends.base import ExpectationBackend

logger = logging.getLogger('qlslab.backends')


class NoisyBackend(ExpectationBackend):
    """Gate-level circuit, routed onto a coupling map and sampled under stochastic noise.

    Args:
        noise_model: Pauli and readout error rates
        shots: Measurements per objective evaluation
        coupling: Device connectivity; None means all-to-all on the problem's qubits
        rewrite_basis: Decompose into {U1, U3, CNOT} before noise is injected
        swap_back: Use the swap-back routing variant
    """

    def __init__(self, noise_model: NoiseModel, shots: int, coupling: Optional[CouplingMap] = None,
                 rewrite_basis: bool = False, swap_back: bool = False):
        super().__init__()
        if int(shots) < 1:
            raise ValidationError("shots must be at least 1", field='shots')
        self.noise_model = noise_model
        self._shots = int(shots)
        self.coupling = coupling
        self.rewrite_basis = rewrite_basis
        self.swap_back = swap_back

    @property
    def mode_name(self) -> str:
        return 'noisy'

    @property
    def shots(self) -> int:
        return self._shots

    def describe(self) -> dict:
        info = super().describe()
        info.update({
            'noise_scale': self.noise_model.scale,
            'coupling': self.coupling.name if self.coupling is not None else 'all_to_all',
            'basis': self.rewrite_basis,
        })
        return info

    def transpile(self, p_ising: IsingProblem, params: QaoaParams) -> Circuit:
        circuit = build_qaoa_circuit(p_ising, params)
        coupling = self.coupling or CouplingMap.all_to_all(max(p_ising.n, 1))
        circuit = route(circuit, coupling, swap_back=self.swap_back)
        if self.rewrite_basis:
            circuit = rewrite_basis(circuit)
        return circuit

    def expectation(self, p_ising: IsingProblem, params: QaoaParams, seed) -> float:
        return expectation_from_samples(p_ising, self.sample(p_ising, params, self._shots, seed))

    def sample(self, p_ising: IsingProblem, params: QaoaParams, shots: int, seed) -> SampleSet:
        circuit = self.transpile(p_ising, params)
        physical = simulate_noisy(circuit, self.noise_model, shots, seed)
        return physical.relabeled(circuit.layout, p_ising.n)
