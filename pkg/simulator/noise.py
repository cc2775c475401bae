# simulator/noise.py
"""
Stochastic Pauli and readout noise.

Each shot follows its own trajectory: after every gate, with probability
p1 (single-qubit) or p2 (two-qubit) times `scale`, each qubit the gate
touched receives an independent uniformly random X, Y or Z. Every measured
bit then flips with probability p_ro * scale.

Random numbers are drawn in a fixed order and shape that depends only on
(shots, gates, qubits), so two noise scales with the same seed share their
draws and the higher scale fires a superset of the errors.
"""

import logging
from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np

from circuits.gates import Circuit
from problems.ising import SpinConvention
from simulator.sampling import SampleSet, sample
from simulator.statevector import PAULI, check_qubit_budget, apply_gate, apply_single, simulate
from utils.error_handling import ValidationError
from utils.seeding import make_rng

logger = logging.getLogger('qlslab.simulator')


@dataclass(frozen=True)
class NoiseModel:
    p1: float = 0.001
    p2: float = 0.02
    p_ro: float = 0.02
    scale: float = 1.0

    def __post_init__(self):
        if self.scale < 0:
            raise ValidationError("noise scale must be non-negative", field='scale')
        for name, value in zip(('p1', 'p2', 'p_ro'), self.effective):
            if not 0.0 <= value <= 1.0:
                raise ValidationError(f"effective {name} = {value} is not a probability", field=name)

    @property
    def effective(self) -> Tuple[float, float, float]:
        return self.p1 * self.scale, self.p2 * self.scale, self.p_ro * self.scale

    def scaled(self, scale: float) -> 'NoiseModel':
        return replace(self, scale=scale)


def _trajectory_probabilities(c: Circuit, pattern: np.ndarray) -> np.ndarray:
    """Output distribution with Pauli codes pattern[g] = (code_first, code_second) after gate g"""
    n = c.n_qubits
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = 1.0
    for g, gate in enumerate(c.gates):
        psi = apply_gate(psi, gate, n)
        for slot, qubit in enumerate(gate.targets):
            code = int(pattern[g, slot])
            if code:
                psi = apply_single(psi, PAULI[code], qubit, n)
    return np.abs(psi) ** 2


def simulate_noisy(c: Circuit, nm: NoiseModel, shots: int, rng_seed) -> SampleSet:
    """
    Sample `shots` noisy measurements of a circuit's physical wires.

    The first draw is the noiseless multinomial sample(simulate(c), ...),
    which gives every shot its error-free outcome; error draws follow in a
    fixed shape. Shots that no error touches keep their error-free outcome,
    so scale 0 returns exactly sample(simulate(c), shots, rng_seed), and with
    a fixed seed the shots hit at one scale are also hit at any larger scale.
    """
    if int(shots) < 1:
        raise ValidationError("shots must be at least 1", field='shots')
    n = c.n_qubits
    check_qubit_budget(n)
    shots = int(shots)
    n_gates = len(c.gates)
    e1, e2, ero = nm.effective

    rng = make_rng(rng_seed)
    clean = sample(simulate(c), shots, rng)
    outcomes = np.repeat([SpinConvention.bits_to_index(bits) for bits in clean.counts],
                         list(clean.counts.values())).astype(np.int64)
    fire_u = rng.random((shots, n_gates))
    codes = rng.integers(1, 4, size=(shots, n_gates, 2))
    outcome_u = rng.random(shots)
    readout_u = rng.random((shots, n))

    arity = np.array([g.n_qubits for g in c.gates], dtype=np.int64).reshape(-1)
    rates = np.where(arity == 2, e2, e1)
    fires = fire_u < rates[None, :]
    codes = np.where(fires[:, :, None], codes, 0)
    codes[:, arity == 1, 1] = 0

    hit = np.flatnonzero(fires.any(axis=1))
    patterns = np.zeros((0, 2 * n_gates), dtype=np.int64)
    if hit.size:
        patterns, inverse = np.unique(codes[hit].reshape(hit.size, 2 * n_gates), axis=0, return_inverse=True)
        inverse = np.asarray(inverse).reshape(-1)
        last = (1 << n) - 1
        for k, flat in enumerate(patterns):
            members = hit[inverse == k]
            probs = _trajectory_probabilities(c, flat.reshape(n_gates, 2))
            cdf = np.cumsum(probs)
            cdf /= cdf[-1]
            picked = np.searchsorted(cdf, outcome_u[members], side='right')
            outcomes[members] = np.minimum(picked, last)
    logger.debug(f"Noisy sampling: {hit.size} of {shots} shots hit by errors, "
                 f"{len(patterns)} distinct error pattern(s)")

    flips = (readout_u < ero).astype(np.int64)
    flip_mask = (flips << np.arange(n, dtype=np.int64)[None, :]).sum(axis=1)
    return SampleSet.from_indices(outcomes ^ flip_mask, n)
