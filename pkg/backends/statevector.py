# backends/statevector.py
from problems.ising import IsingProblem
from qaoa.params import QaoaParams
from simulator.sampling import SampleSet, sample
from simulator.statevector import expectation_exact, qaoa_state_fast
from backends.base import ExpectationBackend


class ExactBackend(ExpectationBackend):
    """Noiseless statevector backend: the energy is computed from exact amplitudes."""

    @property
    def mode_name(self) -> str:
        return 'exact'

    def expectation(self, p_ising: IsingProblem, params: QaoaParams, seed=None) -> float:
        energies = self.spectrum(p_ising)
        return expectation_exact(p_ising, qaoa_state_fast(p_ising, params, energies), energies)

    def sample(self, p_ising: IsingProblem, params: QaoaParams, shots: int, seed) -> SampleSet:
        return sample(qaoa_state_fast(p_ising, params, self.spectrum(p_ising)), shots, seed)
