# problems/blls.py
"""
Binary linear least squares instances: minimize ||Ax - b|| over x in {0,1}^n.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from utils.error_handling import DataSourceError, ValidationError

logger = logging.getLogger('qlslab.problems')

KINDS = ('consistent', 'inconsistent')
CONSISTENCY_TOL = 1e-9


def _frozen(values, dtype=float):
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class BllsInstance:
    """A real m x n matrix A, a real vector b and, optionally, a known optimum x*."""

    a_matrix: np.ndarray
    b_vector: np.ndarray
    x_star: Optional[np.ndarray] = None
    kind: str = 'inconsistent'
    seed: int = 0
    instance_id: str = ''

    def __post_init__(self):
        a = _frozen(self.a_matrix)
        b = _frozen(self.b_vector)
        if a.ndim != 2:
            raise ValidationError(f"A must be a matrix, got shape {a.shape}", field='A')
        m, n = a.shape
        if m < 1 or n < 1:
            raise ValidationError(f"A must have at least one row and column, got {a.shape}", field='A')
        if b.shape != (m,):
            raise ValidationError(f"b must have length {m}, got shape {b.shape}", field='b')
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValidationError("A and b entries must be finite", field='A')
        if self.kind not in KINDS:
            raise ValidationError(f"kind must be one of {KINDS}, got {self.kind!r}", field='kind')
        if int(self.seed) < 0:
            raise ValidationError("seed must be unsigned", field='seed')

        x_star = None
        if self.x_star is not None:
            x_star = _frozen(self.x_star, dtype=np.int64)
            if x_star.shape != (n,) or not np.all((x_star == 0) | (x_star == 1)):
                raise ValidationError(f"x_star must be a binary vector of length {n}", field='x_star')
            if self.kind == 'consistent' and not np.allclose(a @ x_star, b, rtol=0.0, atol=CONSISTENCY_TOL):
                raise ValidationError("consistent instance requires A x* = b", field='x_star')

        object.__setattr__(self, 'a_matrix', a)
        object.__setattr__(self, 'b_vector', b)
        object.__setattr__(self, 'x_star', x_star)
        object.__setattr__(self, 'seed', int(self.seed))

    @property
    def m(self) -> int:
        return self.a_matrix.shape[0]

    @property
    def n(self) -> int:
        return self.a_matrix.shape[1]

    def residual_sq(self, x) -> float:
        """||Ax - b||^2 for a binary vector x"""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValidationError(f"x must have length {self.n}", field='x')
        r = self.a_matrix @ x - self.b_vector
        return float(r @ r)

    def to_json_dict(self) -> dict:
        data = {
            'm': self.m,
            'n': self.n,
            'A': [[float(v) for v in row] for row in self.a_matrix],
            'b': [float(v) for v in self.b_vector],
            'x_star': None if self.x_star is None else [int(v) for v in self.x_star],
            'kind': self.kind,
            'seed': self.seed,
        }
        if self.instance_id:
            data['instance_id'] = self.instance_id
        return data

    @classmethod
    def from_json_dict(cls, data: dict, instance_id: str = '') -> 'BllsInstance':
        try:
            a = np.array(data['A'], dtype=float)
            if a.shape != (int(data['m']), int(data['n'])):
                raise ValidationError(
                    f"declared shape ({data['m']}, {data['n']}) does not match A {a.shape}", field='A')
            return cls(
                a_matrix=a,
                b_vector=data['b'],
                x_star=data.get('x_star'),
                kind=data.get('kind', 'inconsistent'),
                seed=data.get('seed', 0),
                instance_id=data.get('instance_id', instance_id),
            )
        except KeyError as e:
            raise DataSourceError(f"Instance document is missing field {e}", details=data) from e


def save_instance(instance: BllsInstance, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        json.dump(instance.to_json_dict(), f, indent=2)
        f.write('\n')
    return path


def load_instance(path) -> BllsInstance:
    path = Path(path)
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise DataSourceError(f"Invalid JSON in instance file {path}", source=str(path)) from e
    logger.debug(f"Loaded instance from {path}")
    return BllsInstance.from_json_dict(data, instance_id=path.stem)


def three_variable_example() -> BllsInstance:
    """The 3x3 worked example whose unique optimum is x* = (1, 1, 0) with A x* = b."""
    return BllsInstance(
        a_matrix=[[2, 1, 1], [-1, 1, -1], [1, 2, 3]],
        b_vector=[3, 0, 3],
        x_star=[1, 1, 0],
        kind='consistent',
        seed=0,
        instance_id='three_variable_example',
    )
