# simulator/sampling.py
"""Shot sampling and sample-based energy estimates."""

import json
from dataclasses import dataclass, field
from typing import Dict, Sequence

import numpy as np

from circuits.routing import relabel_bits
from problems.ising import IsingProblem, SpinConvention, ising_energy
from simulator.statevector import StateVector
from utils.error_handling import SimulationError, ValidationError
from utils.seeding import make_rng


@dataclass(frozen=True)
class SampleSet:
    """Measured bitstrings (qubit 0 first) and how often each was seen."""

    counts: Dict[str, int] = field(default_factory=dict)
    shots: int = 0

    def __post_init__(self):
        counts = {}
        for bits, count in self.counts.items():
            if int(count) < 0:
                raise ValidationError(f"negative count for {bits}", field='counts')
            if int(count):
                counts[bits] = int(count)
        # canonical order: by basis index
        counts = dict(sorted(counts.items(), key=lambda kv: SpinConvention.bits_to_index(kv[0])))
        if sum(counts.values()) != int(self.shots):
            raise ValidationError(f"counts sum to {sum(counts.values())}, expected {self.shots} shots",
                                  field='shots')
        object.__setattr__(self, 'counts', counts)
        object.__setattr__(self, 'shots', int(self.shots))

    @classmethod
    def from_indices(cls, indices: np.ndarray, n: int) -> 'SampleSet':
        values, freq = np.unique(np.asarray(indices, dtype=np.int64), return_counts=True)
        counts = {SpinConvention.index_to_string(v, n): int(f) for v, f in zip(values, freq)}
        return cls(counts, int(freq.sum()))

    def relabeled(self, layout: Sequence[int], n_logical: int) -> 'SampleSet':
        """Map physical-wire bitstrings to logical bit order using a routing layout"""
        counts: Dict[str, int] = {}
        for bits, count in self.counts.items():
            logical = SpinConvention.format_bits(relabel_bits([int(b) for b in bits], layout, n_logical))
            counts[logical] = counts.get(logical, 0) + count
        return SampleSet(counts, self.shots)

    def frequencies(self, n: int) -> np.ndarray:
        """Empirical distribution as a dense vector over 2^n basis states"""
        out = np.zeros(1 << n)
        for bits, count in self.counts.items():
            out[SpinConvention.bits_to_index(bits)] = count / self.shots
        return out

    def to_json_dict(self) -> dict:
        return {'shots': self.shots, 'counts': dict(self.counts)}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, data: dict) -> 'SampleSet':
        return cls(dict(data['counts']), int(data['shots']))


def sample(state: StateVector, shots: int, rng_seed) -> SampleSet:
    """Multinomial draw of `shots` measurements from |psi|^2."""
    if int(shots) < 1:
        raise ValidationError("shots must be at least 1", field='shots')
    rng = make_rng(rng_seed)
    probs = state.probabilities()
    probs = probs / probs.sum()
    draws = rng.multinomial(int(shots), probs)
    nonzero = np.flatnonzero(draws)
    n = state.n_qubits
    counts = {SpinConvention.index_to_string(i, n): int(draws[i]) for i in nonzero}
    return SampleSet(counts, int(shots))


def expectation_from_samples(p_ising: IsingProblem, s: SampleSet) -> float:
    """Count-weighted mean Ising energy of the measured bitstrings."""
    if s.shots == 0:
        raise SimulationError("cannot estimate an expectation from an empty sample set")
    total = 0.0
    for bits, count in s.counts.items():
        total += count * ising_energy(p_ising, bits)
    return total / s.shots


def best_sampled(p_ising: IsingProblem, s: SampleSet):
    """(bitstring, energy) of the lowest-energy measured outcome"""
    if s.shots == 0:
        raise SimulationError("empty sample set")
    scored = [(ising_energy(p_ising, bits), bits) for bits in s.counts]
    energy, bits = min(scored)
    return bits, energy
