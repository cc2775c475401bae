# circuits/basis.py
"""Rewrite circuits into the restricted {U1, U3, CNOT} device basis."""

import math
from typing import Callable, Dict, List

from circuits.gates import Circuit, Gate
from utils.error_handling import ValidationError

PI = math.pi


def _h(g: Gate) -> List[Gate]:
    return [Gate('U3', g.targets, (PI / 2, 0.0, PI))]


def _rx(g: Gate) -> List[Gate]:
    return [Gate('U3', g.targets, (g.params[0], -PI / 2, PI / 2))]


def _rz(g: Gate) -> List[Gate]:
    # RZ(w) = U3(pi,0,pi) U1(-w/2) U3(pi,0,pi) U1(w/2), listed here in time order
    w = g.params[0]
    flip = Gate('U3', g.targets, (PI, 0.0, PI))
    return [Gate('U1', g.targets, (w / 2,)), flip, Gate('U1', g.targets, (-w / 2,)), flip]


def _swap(g: Gate) -> List[Gate]:
    a, b = g.targets
    return [Gate('CNOT', (a, b)), Gate('CNOT', (b, a)), Gate('CNOT', (a, b))]


def _u2(g: Gate) -> List[Gate]:
    phi, lam = g.params
    return [Gate('U3', g.targets, (PI / 2, phi, lam))]


def _keep(g: Gate) -> List[Gate]:
    return [g]


REWRITES: Dict[str, Callable[[Gate], List[Gate]]] = {
    'H': _h,
    'RX': _rx,
    'RZ': _rz,
    'SWAP': _swap,
    'U2': _u2,
    'U1': _keep,
    'U3': _keep,
    'CNOT': _keep,
}


def rewrite_basis(c: Circuit) -> Circuit:
    """Return an equivalent circuit (up to global phase) using only U1, U3 and CNOT."""
    gates = []
    for gate in c.gates:
        rewrite = REWRITES.get(gate.kind)
        if rewrite is None:
            raise ValidationError(f"no basis rewrite for gate kind {gate.kind}", field='kind')
        gates.extend(rewrite(gate))
    return c.with_gates(gates)
