# circuits/routing.py
"""
Greedy SWAP routing onto a coupling map.

Each two-qubit gate whose operands are not adjacent moves its first operand
along a shortest path until it neighbours the second. By default the moved
qubits stay where they are and the layout records where every logical qubit
ends up; with `swap_back=True` the SWAPs are undone right after the gate.
"""

import logging
from typing import List, Sequence, Tuple

import numpy as np

from circuits.coupling import CouplingMap
from circuits.gates import Circuit, Gate
from utils.error_handling import RoutingError

logger = logging.getLogger('qlslab.circuits')


def route(c: Circuit, coupling: CouplingMap, swap_back: bool = False) -> Circuit:
    """
    Place a circuit on a coupling map, inserting SWAPs where needed.

    Args:
        c: Circuit whose wires are treated as logical qubits
        coupling: Target device connectivity
        swap_back: Restore the placement after every routed gate

    Returns:
        Circuit on coupling.n_physical wires whose layout maps each logical
        qubit to the wire it is measured on. On an all-to-all map the
        circuit is returned unchanged.
    """
    if coupling.n_physical < c.n_qubits:
        raise RoutingError(f"circuit needs {c.n_qubits} qubits but the {coupling.name} map has "
                           f"{coupling.n_physical}")
    if coupling.is_all_to_all:
        return c

    n_phys = coupling.n_physical
    # l2p[w] = physical qubit currently holding input wire w
    l2p = list(range(n_phys))
    p2l = list(range(n_phys))
    routed: List[Gate] = []
    swaps = 0

    def do_swap(a: int, b: int):
        routed.append(Gate('SWAP', (a, b)))
        wa, wb = p2l[a], p2l[b]
        p2l[a], p2l[b] = wb, wa
        l2p[wa], l2p[wb] = b, a

    for gate in c.gates:
        if gate.n_qubits == 1:
            routed.append(Gate(gate.kind, (l2p[gate.targets[0]],), gate.params))
            continue

        first, second = gate.targets
        inserted: List[Tuple[int, int]] = []
        if not coupling.are_connected(l2p[first], l2p[second]):
            path = coupling.shortest_path(l2p[first], l2p[second])
            for a, b in zip(path[:-2], path[1:-1]):
                do_swap(a, b)
                inserted.append((a, b))
            swaps += len(inserted)
        routed.append(Gate(gate.kind, (l2p[first], l2p[second]), gate.params))
        if swap_back:
            for a, b in reversed(inserted):
                do_swap(a, b)
            swaps += len(inserted)

    input_layout = list(c.layout) + list(range(c.n_qubits, n_phys))
    layout = tuple(l2p[w] for w in input_layout)
    logger.debug(f"Routed {len(c.gates)} gates on {coupling.name} map with {swaps} SWAP(s)")
    return Circuit(n_phys, tuple(routed), layout)


def relabel_bits(physical_bits: Sequence[int], layout: Sequence[int], n_logical: int) -> Tuple[int, ...]:
    """Logical bit q is the measured value of wire layout[q]"""
    return tuple(int(physical_bits[layout[q]]) for q in range(n_logical))


def relabel_probabilities(probs: np.ndarray, layout: Sequence[int], n_logical: int) -> np.ndarray:
    """Marginal distribution over logical qubits from a distribution over physical wires"""
    if len(layout) < n_logical:
        raise RoutingError("layout shorter than the logical register")
    index = np.arange(probs.shape[0], dtype=np.int64)
    logical_index = np.zeros_like(index)
    for q in range(n_logical):
        logical_index |= ((index >> layout[q]) & 1) << q
    out = np.zeros(1 << n_logical)
    np.add.at(out, logical_index, probs)
    return out
