# backends/shots.py
from problems.ising import IsingProblem
from qaoa.params import QaoaParams
from simulator.sampling import SampleSet, expectation_from_samples, sample
from simulator.statevector import qaoa_state_fast
from utils.error_handling import ValidationError
from backends.base import ExpectationBackend


class ShotBackend(ExpectationBackend):
    """Noiseless state measured a finite number of times; the energy is a sample mean."""

    def __init__(self, shots: int):
        super().__init__()
        if int(shots) < 1:
            raise ValidationError("shots must be at least 1", field='shots')
        self._shots = int(shots)

    @property
    def mode_name(self) -> str:
        return 'shots'

    @property
    def shots(self) -> int:
        return self._shots

    def expectation(self, p_ising: IsingProblem, params: QaoaParams, seed) -> float:
        return expectation_from_samples(p_ising, self.sample(p_ising, params, self._shots, seed))

    def sample(self, p_ising: IsingProblem, params: QaoaParams, shots: int, seed) -> SampleSet:
        return sample(qaoa_state_fast(p_ising, params, self.spectrum(p_ising)), shots, seed)
