# data_sources/generator.py
"""
Seeded random BLLS datasets.

A entries are nonzero with probability `density`; nonzero values are uniform
on the 3-decimal grid of [-1, 1) with zero excluded. Rows that come out
entirely zero are redrawn. The first round(consistent_fraction * count)
instances of each n are consistent (b = A x* for a random binary x*); the
rest draw b from the same value distribution and record the brute-force
optimum as x*.
"""

import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import numpy as np

from data_sources.base import InstanceSource
from problems.blls import BllsInstance
from problems.ising import MAX_BRUTE_FORCE_N, SpinConvention, brute_force_solve, instance_to_ising
from utils.error_handling import DataSourceError, ValidationError
from utils.parallel import run_parallel
from utils.seeding import derive_seed, make_rng

logger = logging.getLogger('qlslab.datagen')

QUANTUM = 1000
DEFAULT_N_VALUES = (3, 4, 5, 9, 10)


@dataclass(frozen=True)
class DatasetSpec:
    n_values: Tuple[int, ...] = DEFAULT_N_VALUES
    m: int = 40
    density: float = 0.2
    problems_per_n: int = 100
    consistent_fraction: float = 0.4
    master_seed: int = 0
    sparse_b: bool = False
    max_row_retries: int = 1000

    def __post_init__(self):
        n_values = tuple(int(n) for n in self.n_values)
        if not n_values or any(not 1 <= n <= MAX_BRUTE_FORCE_N for n in n_values):
            raise ValidationError(f"n values must lie in 1..{MAX_BRUTE_FORCE_N}", field='n_values')
        if self.m < 1:
            raise ValidationError("m must be at least 1", field='m')
        if not 0.0 < self.density <= 1.0:
            raise ValidationError("density must lie in (0, 1]", field='density')
        if not 0.0 <= self.consistent_fraction <= 1.0:
            raise ValidationError("consistent_fraction must lie in [0, 1]", field='consistent_fraction')
        if self.problems_per_n < 1:
            raise ValidationError("problems_per_n must be at least 1", field='problems_per_n')
        if self.master_seed < 0:
            raise ValidationError("master_seed must be unsigned", field='master_seed')
        object.__setattr__(self, 'n_values', n_values)

    @property
    def consistent_count(self) -> int:
        return int(round(self.consistent_fraction * self.problems_per_n))


def instance_id_for(n: int, index: int) -> str:
    return f"n{n:02d}_{index:03d}"


def draw_values(rng: np.random.Generator, shape) -> np.ndarray:
    """Uniform over {-1.000, ..., -0.001, 0.001, ..., 0.999}"""
    ints = rng.integers(-QUANTUM, QUANTUM - 1, size=shape)
    ints = np.where(ints >= 0, ints + 1, ints)
    return ints / QUANTUM


def draw_sparse(rng: np.random.Generator, shape, density: float) -> np.ndarray:
    mask = rng.random(shape) < density
    return np.where(mask, draw_values(rng, shape), 0.0)


def draw_matrix(rng: np.random.Generator, m: int, n: int, density: float, max_retries: int) -> np.ndarray:
    a = draw_sparse(rng, (m, n), density)
    for i in range(m):
        retries = 0
        while not np.any(a[i]):
            if retries >= max_retries:
                raise DataSourceError(f"row {i} stayed all-zero after {max_retries} redraws "
                                      f"(density {density}, n {n})", source='generator')
            a[i] = draw_sparse(rng, (n,), density)
            retries += 1
    return a


def generate_instance(spec: DatasetSpec, n: int, index: int) -> BllsInstance:
    """The index-th instance for n; depends only on (master_seed, n, index)."""
    seed = derive_seed(spec.master_seed, n, index)
    rng = make_rng(seed)
    a = draw_matrix(rng, spec.m, n, spec.density, spec.max_row_retries)
    instance_id = instance_id_for(n, index)

    if index < spec.consistent_count:
        x_star = rng.integers(0, 2, size=n)
        return BllsInstance(a, a @ x_star, x_star, 'consistent', seed, instance_id)

    if spec.sparse_b:
        b = draw_sparse(rng, (spec.m,), spec.density)
    else:
        b = draw_values(rng, (spec.m,))
    draft = BllsInstance(a, b, None, 'inconsistent', seed, instance_id)
    _, ground_bits = brute_force_solve(instance_to_ising(draft))
    x_star = SpinConvention.bits_to_variables(min(ground_bits))
    return BllsInstance(a, b, x_star, 'inconsistent', seed, instance_id)


def _generate_task(args) -> BllsInstance:
    spec, n, index = args
    return generate_instance(spec, n, index)


def generate(spec: DatasetSpec, jobs: Optional[int] = 1) -> List[BllsInstance]:
    """
    Generate the full dataset, ordered by n then index.

    Args:
        spec: Dataset parameters
        jobs: Worker processes; the output does not depend on it

    Returns:
        problems_per_n instances for every n in spec.n_values
    """
    tasks = [(spec, n, index) for n in spec.n_values for index in range(spec.problems_per_n)]
    instances = run_parallel(_generate_task, tasks, jobs)
    logger.info(f"Generated {len(instances)} instance(s) for n in {list(spec.n_values)} "
                f"({spec.consistent_count} consistent per n)")
    return instances


class GeneratedSource(InstanceSource):
    """Instances produced on the fly from a DatasetSpec."""

    def __init__(self, spec: DatasetSpec, jobs: Optional[int] = 1):
        self.spec = spec
        self.jobs = jobs
        self._instances: Optional[List[BllsInstance]] = None

    @property
    def source_name(self) -> str:
        return f"generated(seed={self.spec.master_seed})"

    def instances(self) -> Iterator[BllsInstance]:
        if self._instances is None:
            self._instances = generate(self.spec, self.jobs)
        return iter(self._instances)
