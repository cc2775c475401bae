# circuits/gates.py
"""
Gate-level circuit representation and its one-gate-per-line text format.

    H 0
    RZ 0 -3.0
    CNOT 0 1
    U3 2 1.5707963267948966 0.0 3.141592653589793
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Tuple

from utils.error_handling import ValidationError

# kind -> (number of qubits, number of angle parameters)
GATE_SIGNATURES: Dict[str, Tuple[int, int]] = {
    'H': (1, 0),
    'RX': (1, 1),
    'RZ': (1, 1),
    'U1': (1, 1),
    'U2': (1, 2),
    'U3': (1, 3),
    'CNOT': (2, 0),
    'SWAP': (2, 0),
}


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: Tuple[int, ...]
    params: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in GATE_SIGNATURES:
            raise ValidationError(f"Unknown gate kind {self.kind!r}", field='kind')
        arity, n_params = GATE_SIGNATURES[self.kind]
        targets = tuple(int(t) for t in self.targets)
        params = tuple(float(v) for v in self.params)
        if len(targets) != arity:
            raise ValidationError(f"{self.kind} acts on {arity} qubit(s), got {targets}", field='targets')
        if len(set(targets)) != len(targets):
            raise ValidationError(f"{self.kind} targets must be distinct, got {targets}", field='targets')
        if any(t < 0 for t in targets):
            raise ValidationError(f"negative qubit index in {targets}", field='targets')
        if len(params) != n_params:
            raise ValidationError(f"{self.kind} takes {n_params} angle(s), got {params}", field='params')
        if not all(math.isfinite(v) for v in params):
            raise ValidationError(f"{self.kind} angles must be finite, got {params}", field='params')
        object.__setattr__(self, 'targets', targets)
        object.__setattr__(self, 'params', params)

    @property
    def n_qubits(self) -> int:
        return len(self.targets)

    def to_text(self) -> str:
        parts = [self.kind] + [str(t) for t in self.targets] + [repr(v) for v in self.params]
        return ' '.join(parts)

    @classmethod
    def from_text(cls, line: str) -> 'Gate':
        tokens = line.split()
        if not tokens:
            raise ValidationError("empty gate line", field='line')
        kind = tokens[0].upper()
        if kind not in GATE_SIGNATURES:
            raise ValidationError(f"Unknown gate kind {tokens[0]!r}", field='kind')
        arity, n_params = GATE_SIGNATURES[kind]
        if len(tokens) != 1 + arity + n_params:
            raise ValidationError(f"malformed gate line {line!r}", field='line')
        try:
            targets = tuple(int(t) for t in tokens[1:1 + arity])
            params = tuple(float(v) for v in tokens[1 + arity:])
        except ValueError as e:
            raise ValidationError(f"malformed gate line {line!r}", field='line') from e
        return cls(kind, targets, params)


@dataclass(frozen=True)
class Circuit:
    """Ordered gates over `n_qubits` wires plus the logical -> physical layout.

    `layout[q]` is the wire on which logical qubit q is measured; it is the
    identity until the circuit is routed.
    """

    n_qubits: int
    gates: Tuple[Gate, ...] = ()
    layout: Tuple[int, ...] = field(default=())

    def __post_init__(self):
        n = int(self.n_qubits)
        if n < 0:
            raise ValidationError("n_qubits must be non-negative", field='n_qubits')
        gates = tuple(self.gates)
        for gate in gates:
            if any(t >= n for t in gate.targets):
                raise ValidationError(f"gate {gate.to_text()!r} addresses a qubit outside 0..{n - 1}",
                                      field='gates')
        layout = tuple(int(q) for q in self.layout) if self.layout else tuple(range(n))
        if sorted(layout) != list(range(n)):
            raise ValidationError(f"layout {layout} is not a permutation of 0..{n - 1}", field='layout')
        object.__setattr__(self, 'n_qubits', n)
        object.__setattr__(self, 'gates', gates)
        object.__setattr__(self, 'layout', layout)

    def with_gates(self, gates: Iterable[Gate], layout=None) -> 'Circuit':
        return Circuit(self.n_qubits, tuple(gates), self.layout if layout is None else tuple(layout))

    def to_text(self) -> str:
        header = f"# qubits {self.n_qubits} layout {' '.join(str(q) for q in self.layout)}"
        return '\n'.join([header] + [g.to_text() for g in self.gates]) + '\n'

    @classmethod
    def from_text(cls, text: str) -> 'Circuit':
        n_qubits = None
        layout = ()
        gates = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith('#'):
                tokens = line[1:].split()
                if tokens[:1] == ['qubits']:
                    n_qubits = int(tokens[1])
                    if len(tokens) > 3 and tokens[2] == 'layout':
                        layout = tuple(int(t) for t in tokens[3:])
                continue
            gates.append(Gate.from_text(line))
        if n_qubits is None:
            n_qubits = 1 + max((t for g in gates for t in g.targets), default=-1)
        return cls(n_qubits, tuple(gates), layout)
