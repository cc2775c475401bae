# circuits/report.py
"""Gate accounting for transpiled circuits."""

from collections import Counter
from typing import Any, Dict

from circuits.gates import Circuit


def depth_and_counts(c: Circuit) -> Dict[str, Any]:
    """
    Count gates by kind and compute circuit depth.

    Depth is the longest chain of gates where consecutive gates share a qubit.

    Returns:
        {'n_qubits', 'counts' (sorted by kind), 'total', 'two_qubit', 'depth'}
    """
    counts = Counter(g.kind for g in c.gates)
    level = [0] * c.n_qubits
    for gate in c.gates:
        top = 1 + max(level[t] for t in gate.targets)
        for t in gate.targets:
            level[t] = top
    return {
        'n_qubits': c.n_qubits,
        'counts': {kind: counts[kind] for kind in sorted(counts)},
        'total': len(c.gates),
        'two_qubit': sum(1 for g in c.gates if g.n_qubits == 2),
        'depth': max(level, default=0),
    }
