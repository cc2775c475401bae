# backends/base.py
from abc import ABC, abstractmethod
from typing import Optional

import numpy as np

from problems.ising import IsingProblem, energy_spectrum
from qaoa.params import QaoaParams
from simulator.sampling import SampleSet


class ExpectationBackend(ABC):
    """Base class for the ways a QAOA energy can be measured."""

    def __init__(self):
        self._spectrum_owner: Optional[IsingProblem] = None
        self._spectrum: Optional[np.ndarray] = None

    @property
    @abstractmethod
    def mode_name(self) -> str:
        """Return the mode label used in records ('exact', 'shots', 'noisy')."""
        pass

    @property
    def shots(self) -> Optional[int]:
        """Shots per objective evaluation, None for the exact backend."""
        return None

    @abstractmethod
    def expectation(self, p_ising: IsingProblem, params: QaoaParams, seed) -> float:
        """
        Estimate <C> at the given angles.

        Args:
            p_ising: Cost function (offset excluded from the estimate)
            params: QAOA angles
            seed: Seed for this evaluation's random stream (ignored when exact)

        Returns:
            float: the energy estimate
        """
        pass

    @abstractmethod
    def sample(self, p_ising: IsingProblem, params: QaoaParams, shots: int, seed) -> SampleSet:
        """
        Measure the QAOA state `shots` times.

        Returns:
            SampleSet keyed by logical bitstrings (qubit 0 first)
        """
        pass

    def describe(self) -> dict:
        """Return the fields that identify this backend in a run record."""
        return {'mode': self.mode_name, 'shots': self.shots}

    def spectrum(self, p_ising: IsingProblem) -> np.ndarray:
        """Energy of every basis state, cached for the most recent problem"""
        if self._spectrum_owner is not p_ising:
            self._spectrum = energy_spectrum(p_ising)
            self._spectrum_owner = p_ising
        return self._spectrum
