# circuits/builder.py
"""
Gate-level QAOA circuits.

Layer l applies exp(-i gamma_l C) as single-qubit RZ phases plus one
CNOT-RZ-CNOT gadget per coupling, followed by the RX(2 beta_l) mixer.
"""

import logging
from typing import List

from circuits.gates import Circuit, Gate
from problems.ising import IsingProblem
from qaoa.params import QaoaParams

logger = logging.getLogger('qlslab.circuits')


def zz_gadget(j: int, k: int, angle: float) -> List[Gate]:
    """CNOT(j,k) RZ(angle) on k CNOT(j,k), i.e. exp(-i angle/2 Z_j Z_k)"""
    return [Gate('CNOT', (j, k)), Gate('RZ', (k,), (angle,)), Gate('CNOT', (j, k))]


def build_qaoa_circuit(p_ising: IsingProblem, params: QaoaParams, allow_unbounded: bool = False,
                       zz_threshold: float = 0.0) -> Circuit:
    """
    Build the QAOA circuit for an Ising problem.

    Args:
        p_ising: Cost function in Ising form (offset is a global phase and is not emitted)
        params: Layer angles
        allow_unbounded: Skip the gamma in [0, 2pi], beta in [0, pi] check
        zz_threshold: Drop couplings with |J| below this value (0 keeps every nonzero term)

    Returns:
        Circuit on p_ising.n qubits with identity layout
    """
    if not allow_unbounded:
        params.check_bounds()

    n = p_ising.n
    gates = [Gate('H', (q,)) for q in range(n)]
    couplings = sorted((key, value) for key, value in p_ising.j.items()
                       if value != 0.0 and abs(value) >= zz_threshold)
    dropped = sum(1 for v in p_ising.j.values() if v != 0.0) - len(couplings)
    if dropped:
        logger.debug(f"Dropped {dropped} coupling(s) below |J| < {zz_threshold}")

    for gamma, beta in zip(params.gamma, params.beta):
        for q in range(n):
            if p_ising.h[q] != 0.0:
                gates.append(Gate('RZ', (q,), (2.0 * p_ising.h[q] * gamma,)))
        for (j, k), value in couplings:
            gates.extend(zz_gadget(j, k, 2.0 * gamma * value))
        gates.extend(Gate('RX', (q,), (2.0 * beta,)) for q in range(n))

    return Circuit(n, tuple(gates))
