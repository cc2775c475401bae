# nbmf/solvers.py
from abc import ABC, abstractmethod
from typing import Optional

import numpy as np

from backends.base import ExpectationBackend
from backends.statevector import ExactBackend
from baselines.annealing import SaConfig, sa_batch
from optimizer.imfil import OptimizerConfig
from problems.blls import BllsInstance
from problems.ising import SpinConvention, brute_force_solve, instance_to_ising
from qaoa.driver import run_qaoa
from utils.error_handling import ProblemSizeError

BRUTE_FORCE_LIMIT = 20


class BllsBackend(ABC):
    """Base class for binary least-squares solvers used in the H half-step."""

    @property
    @abstractmethod
    def name(self) -> str:
        """Return the short backend name ('brute', 'sa', 'qaoa')."""
        pass

    @abstractmethod
    def solve(self, instance: BllsInstance, seed: int) -> np.ndarray:
        """
        Approximately minimize ||Ax - b|| over binary x.

        Returns:
            np.ndarray: binary vector of length instance.n
        """
        pass


class BruteForceBackend(BllsBackend):
    """Exact enumeration; ties go to the smallest measured bitstring."""

    @property
    def name(self) -> str:
        return 'brute'

    def solve(self, instance: BllsInstance, seed: int = 0) -> np.ndarray:
        if instance.n > BRUTE_FORCE_LIMIT:
            raise ProblemSizeError(f"brute force over {instance.n} variables exceeds {BRUTE_FORCE_LIMIT}",
                                   n=instance.n, limit=BRUTE_FORCE_LIMIT)
        _, ground_bits = brute_force_solve(instance_to_ising(instance))
        return SpinConvention.bits_to_variables(min(ground_bits))


class AnnealingBackend(BllsBackend):
    """Best of `runs` simulated-annealing chains."""

    def __init__(self, cfg: SaConfig = SaConfig(), runs: int = 10):
        self.cfg = cfg
        self.runs = runs

    @property
    def name(self) -> str:
        return 'sa'

    def solve(self, instance: BllsInstance, seed: int) -> np.ndarray:
        bits, energies = sa_batch(instance_to_ising(instance), self.cfg, self.runs, rng=seed)
        return SpinConvention.bits_to_variables(bits[int(np.argmin(energies))])


class QaoaBackend(BllsBackend):
    """Lowest-energy bitstring measured from an optimized QAOA state."""

    def __init__(self, p: int = 1, mode: Optional[ExpectationBackend] = None,
                 cfg: OptimizerConfig = OptimizerConfig(), n_starts: int = 5):
        self.p = p
        self.mode = mode or ExactBackend()
        self.cfg = cfg
        self.n_starts = n_starts

    @property
    def name(self) -> str:
        return 'qaoa'

    def solve(self, instance: BllsInstance, seed: int) -> np.ndarray:
        record = run_qaoa(instance_to_ising(instance), self.p, self.mode, self.cfg, self.n_starts, seed,
                          instance_id=instance.instance_id)
        return SpinConvention.bits_to_variables(record.best_sampled_bits)


def backend_by_name(name: str, seed: int = 0, **options) -> BllsBackend:
    if name == 'brute':
        return BruteForceBackend()
    if name == 'sa':
        return AnnealingBackend(SaConfig(seed=seed), **options)
    if name == 'qaoa':
        return QaoaBackend(**options)
    raise KeyError(name)
