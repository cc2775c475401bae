# problems/ising.py
"""
Ising form of a QUBO and the bit/spin/variable convention used by every module.

Convention: a measured qubit bit xi maps to spin sigma = +1 for xi = 0 and
sigma = -1 for xi = 1, and the binary variable is x = 1 - xi, so that
sigma = 2x - 1. Basis-state index bit j is qubit j; bitstrings are printed
qubit 0 first.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Sequence, Tuple, Union

import numpy as np

from problems.qubo import QuboProblem, encode_qubo
from utils.error_handling import ProblemSizeError, ValidationError

logger = logging.getLogger('qlslab.problems')

MAX_BRUTE_FORCE_N = 24
GROUND_TOL = 1e-9

Bits = Union[str, Sequence[int], np.ndarray]


class SpinConvention:
    """The single documented bitstring <-> spin <-> variable mapping."""

    @staticmethod
    def parse_bits(bits: Bits) -> np.ndarray:
        if isinstance(bits, str):
            if not set(bits) <= {'0', '1'}:
                raise ValidationError(f"bitstring {bits!r} must contain only 0 and 1", field='bits')
            return np.array([int(c) for c in bits], dtype=np.int64)
        arr = np.asarray(bits, dtype=np.int64)
        if arr.ndim != 1 or not np.all((arr == 0) | (arr == 1)):
            raise ValidationError("bits must be a binary vector", field='bits')
        return arr

    @staticmethod
    def bits_to_spins(bits: Bits) -> np.ndarray:
        return 1 - 2 * SpinConvention.parse_bits(bits)

    @staticmethod
    def bits_to_variables(bits: Bits) -> np.ndarray:
        return 1 - SpinConvention.parse_bits(bits)

    @staticmethod
    def variables_to_bits(x) -> np.ndarray:
        return 1 - SpinConvention.parse_bits(x)

    @staticmethod
    def index_to_bits(index: int, n: int) -> Tuple[int, ...]:
        return tuple((int(index) >> j) & 1 for j in range(n))

    @staticmethod
    def bits_to_index(bits: Bits) -> int:
        arr = SpinConvention.parse_bits(bits)
        return int(sum(int(b) << j for j, b in enumerate(arr)))

    @staticmethod
    def format_bits(bits: Bits) -> str:
        return ''.join(str(int(b)) for b in SpinConvention.parse_bits(bits))

    @staticmethod
    def index_to_string(index: int, n: int) -> str:
        return ''.join(str((int(index) >> j) & 1) for j in range(n))


@dataclass(frozen=True, eq=False)
class IsingProblem:
    """F(sigma) = sum h_j sigma_j + sum_{j<k} J_jk sigma_j sigma_k (+ offset).

    `constant` is the QUBO constant (||b||^2 for BLLS) carried alongside so
    that ising + offset + constant recovers the least-squares residual.
    """

    h: np.ndarray
    j: Dict[Tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0
    constant: float = 0.0

    def __post_init__(self):
        h = np.array(self.h, dtype=float, copy=True)
        h.setflags(write=False)
        n = h.shape[0]
        couplings = {}
        for (a, b), value in sorted(self.j.items()):
            if not (0 <= a < b < n):
                raise ValidationError(f"coupling key ({a}, {b}) must satisfy 0 <= j < k < {n}", field='j')
            couplings[(int(a), int(b))] = float(value)
        object.__setattr__(self, 'h', h)
        object.__setattr__(self, 'j', couplings)
        object.__setattr__(self, 'offset', float(self.offset))
        object.__setattr__(self, 'constant', float(self.constant))

    @property
    def n(self) -> int:
        return self.h.shape[0]

    def scaled(self, factor: float) -> 'IsingProblem':
        """Uniformly scale h and J (offset and constant scale too)"""
        return IsingProblem(
            h=self.h * factor,
            j={k: v * factor for k, v in self.j.items()},
            offset=self.offset * factor,
            constant=self.constant * factor,
        )

    def coupling_matrix(self) -> np.ndarray:
        """Symmetric n x n coupling matrix with zero diagonal"""
        mat = np.zeros((self.n, self.n))
        for (a, b), value in self.j.items():
            mat[a, b] = value
            mat[b, a] = value
        return mat


def qubo_to_ising(q: QuboProblem) -> IsingProblem:
    """Substitute x = (sigma + 1) / 2; F_qubo(x) = F_ising(sigma) + offset."""
    n = q.n
    h = q.linear / 2.0
    couplings = {}
    offset = float(np.sum(q.linear)) / 2.0
    for (a, b), w in q.quadratic.items():
        # w x_a x_b = w/4 (sigma_a sigma_b + sigma_a + sigma_b + 1)
        couplings[(a, b)] = w / 4.0
        h[a] += w / 4.0
        h[b] += w / 4.0
        offset += w / 4.0
    if n == 0:
        offset = 0.0
    return IsingProblem(h=h, j=couplings, offset=offset, constant=q.constant)


def ising_energy(p: IsingProblem, bits: Bits) -> float:
    """Ising energy of a measured bitstring, offset NOT included."""
    spins = SpinConvention.bits_to_spins(bits)
    if spins.shape != (p.n,):
        raise ValidationError(f"bitstring length {spins.shape[0]} does not match n = {p.n}", field='bits')
    energy = float(p.h @ spins)
    for (a, b), value in p.j.items():
        energy += value * spins[a] * spins[b]
    return energy


def energy_spectrum(p: IsingProblem) -> np.ndarray:
    """Ising energy of every basis state, indexed so that bit j of the index is qubit j."""
    n = p.n
    if n > MAX_BRUTE_FORCE_N:
        raise ProblemSizeError(f"n = {n} exceeds the enumeration limit {MAX_BRUTE_FORCE_N}",
                               n=n, limit=MAX_BRUTE_FORCE_N)
    index = np.arange(1 << n, dtype=np.int64)
    spins = [1.0 - 2.0 * ((index >> q) & 1) for q in range(n)]
    energies = np.zeros(1 << n)
    for q in range(n):
        if p.h[q] != 0.0:
            energies += p.h[q] * spins[q]
    for (a, b), value in p.j.items():
        energies += value * (spins[a] * spins[b])
    return energies


def brute_force_solve(p: IsingProblem) -> Tuple[float, FrozenSet[Tuple[int, ...]]]:
    """Exact ground energy and every minimizing bitstring (ties preserved)."""
    energies = energy_spectrum(p)
    ground_energy = float(np.min(energies))
    tol = GROUND_TOL * max(1.0, abs(ground_energy))
    minimizers = np.flatnonzero(energies <= ground_energy + tol)
    ground_bits = frozenset(SpinConvention.index_to_bits(i, p.n) for i in minimizers)
    logger.debug(f"Brute force over 2^{p.n} states: E_gs = {ground_energy}, {len(ground_bits)} ground state(s)")
    return ground_energy, ground_bits


def ground_indices(ground_bits) -> np.ndarray:
    """Sorted basis indices of a set of ground bitstrings"""
    return np.array(sorted(SpinConvention.bits_to_index(b) for b in ground_bits), dtype=np.int64)


def has_mixed_ground_state(ground_bits) -> bool:
    """True when no ground bitstring is all zeros or all ones"""
    return all(0 < sum(b) < len(b) for b in ground_bits)


def instance_to_ising(instance) -> IsingProblem:
    """BLLS instance -> QUBO -> Ising, the chain every solver starts from"""
    return qubo_to_ising(encode_qubo(instance))
