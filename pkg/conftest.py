"""Shared fixtures for the qlslab test suites."""

import numpy as np
import pytest

from problems.blls import BllsInstance, three_variable_example
from problems.ising import IsingProblem, instance_to_ising
from utils.seeding import make_rng


def random_instance(rng: np.random.Generator, n: int, m: int = None, instance_id: str = '') -> BllsInstance:
    """Dense random instance with entries in [-1, 1) rounded to 3 decimals"""
    m = m or max(n, 4)
    a = np.round(rng.uniform(-1.0, 1.0, size=(m, n)), 3)
    b = np.round(rng.uniform(-1.0, 1.0, size=m), 3)
    return BllsInstance(a, b, instance_id=instance_id)


def random_ising(rng: np.random.Generator, n: int) -> IsingProblem:
    h = rng.normal(size=n)
    j = {(a, b): float(rng.normal()) for a in range(n) for b in range(a + 1, n)}
    return IsingProblem(h=h, j=j)


@pytest.fixture
def example_instance() -> BllsInstance:
    return three_variable_example()


@pytest.fixture
def example_ising(example_instance) -> IsingProblem:
    return instance_to_ising(example_instance)


@pytest.fixture
def rng() -> np.random.Generator:
    return make_rng(12345)


@pytest.fixture
def out_dir(tmp_path):
    path = tmp_path / 'out'
    path.mkdir()
    return path
