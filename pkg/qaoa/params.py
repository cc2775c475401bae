# qaoa/params.py
"""QAOA angles: p cost angles gamma in [0, 2pi] and p mixer angles beta in [0, pi]."""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from utils.error_handling import ValidationError

GAMMA_MAX = 2.0 * math.pi
BETA_MAX = math.pi


@dataclass(frozen=True)
class QaoaParams:
    gamma: tuple
    beta: tuple

    def __post_init__(self):
        gamma = tuple(float(g) for g in np.atleast_1d(self.gamma))
        beta = tuple(float(b) for b in np.atleast_1d(self.beta))
        if len(gamma) != len(beta):
            raise ValidationError(f"gamma and beta lengths differ ({len(gamma)} vs {len(beta)})", field='params')
        if not gamma:
            raise ValidationError("QAOA needs at least one layer", field='p')
        if not all(math.isfinite(v) for v in gamma + beta):
            raise ValidationError("angles must be finite", field='params')
        object.__setattr__(self, 'gamma', gamma)
        object.__setattr__(self, 'beta', beta)

    @property
    def p(self) -> int:
        return len(self.gamma)

    def in_bounds(self) -> bool:
        return (all(0.0 <= g <= GAMMA_MAX for g in self.gamma)
                and all(0.0 <= b <= BETA_MAX for b in self.beta))

    def check_bounds(self) -> None:
        if not self.in_bounds():
            raise ValidationError(
                f"angles out of range: gamma must lie in [0, 2pi] and beta in [0, pi], "
                f"got gamma={self.gamma} beta={self.beta}", field='params')

    def to_vector(self) -> np.ndarray:
        """Optimizer layout: [gamma_1..gamma_p, beta_1..beta_p]"""
        return np.array(self.gamma + self.beta, dtype=float)

    @classmethod
    def from_vector(cls, vector: Sequence[float]) -> 'QaoaParams':
        vec = np.asarray(vector, dtype=float)
        if vec.ndim != 1 or vec.shape[0] % 2 or vec.shape[0] == 0:
            raise ValidationError(f"parameter vector must have even length 2p, got {vec.shape}", field='params')
        p = vec.shape[0] // 2
        return cls(tuple(vec[:p]), tuple(vec[p:]))

    @classmethod
    def zeros(cls, p: int) -> 'QaoaParams':
        return cls((0.0,) * p, (0.0,) * p)

    @staticmethod
    def box(p: int):
        """(lower, upper) bound vectors matching `to_vector`"""
        lower = np.zeros(2 * p)
        upper = np.array([GAMMA_MAX] * p + [BETA_MAX] * p)
        return lower, upper
