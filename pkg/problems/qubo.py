# problems/qubo.py
"""QUBO form of a BLLS instance: F(x) = sum_j v_j x_j + sum_{j<k} w_jk x_j x_k."""

from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from problems.blls import BllsInstance
from utils.error_handling import ValidationError


@dataclass(frozen=True, eq=False)
class QuboProblem:
    linear: np.ndarray
    quadratic: Dict[Tuple[int, int], float] = field(default_factory=dict)
    constant: float = 0.0

    def __post_init__(self):
        v = np.array(self.linear, dtype=float, copy=True)
        v.setflags(write=False)
        n = v.shape[0]
        quadratic = {}
        for (j, k), w in sorted(self.quadratic.items()):
            if not (0 <= j < k < n):
                raise ValidationError(f"quadratic key ({j}, {k}) must satisfy 0 <= j < k < {n}",
                                      field='quadratic')
            quadratic[(int(j), int(k))] = float(w)
        object.__setattr__(self, 'linear', v)
        object.__setattr__(self, 'quadratic', quadratic)
        object.__setattr__(self, 'constant', float(self.constant))

    @property
    def n(self) -> int:
        return self.linear.shape[0]

    def evaluate(self, x) -> float:
        """F_qubo(x) without the constant"""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValidationError(f"x must have length {self.n}", field='x')
        value = float(self.linear @ x)
        for (j, k), w in self.quadratic.items():
            value += w * x[j] * x[k]
        return value


def encode_qubo(instance: BllsInstance) -> QuboProblem:
    """Expand ||Ax - b||^2 into QUBO coefficients; the dropped constant is ||b||^2."""
    a = instance.a_matrix
    b = instance.b_vector
    # v_j = sum_i A_ij (A_ij - 2 b_i)
    linear = np.einsum('ij,ij->j', a, a - 2.0 * b[:, None])
    gram = a.T @ a
    n = instance.n
    quadratic = {}
    for j in range(n):
        for k in range(j + 1, n):
            w = 2.0 * gram[j, k]
            if w != 0.0:
                quadratic[(j, k)] = w
    return QuboProblem(linear=linear, quadratic=quadratic, constant=float(b @ b))
