"""Tests for the simulated-annealing and uniform-sampling baselines."""

import numpy as np
import pytest

from analysis.curve_fit import fit_success_model
from backends.statevector import ExactBackend
from baselines.annealing import (SaConfig, sa_batch, sa_run, sa_schedule, sa_success_curve, sa_success_fraction,
                                 sa_success_table, success_curve_from_table)
from baselines.random_sampling import random_sampling_success
from data_sources.generator import DatasetSpec, generate
from optimizer.imfil import OptimizerConfig
from problems.ising import IsingProblem, brute_force_solve, ising_energy, instance_to_ising
from qaoa.driver import run_qaoa
from utils.error_handling import ValidationError


def test_schedule_endpoints():
    """Test the exponential temperature ladder"""
    cfg = SaConfig()
    assert sa_schedule(cfg, 0) == 100.0
    assert sa_schedule(cfg, 10) == 0.01
    assert sa_schedule(cfg, 5) == pytest.approx(1.0)
    temps = [sa_schedule(cfg, i) for i in range(11)]
    assert temps == sorted(temps, reverse=True)
    with pytest.raises(ValidationError):
        sa_schedule(cfg, 11)
    with pytest.raises(ValidationError):
        SaConfig(t0=0.01, tf=1.0)


def test_random_sampling_success():
    """Test 1 - (1 - g / 2^n)^q"""
    assert random_sampling_success(3, 1, 1) == pytest.approx(1 / 8)
    assert random_sampling_success(2, 4, 1) == 1.0
    assert random_sampling_success(4, 2, 0) == 0.0
    assert random_sampling_success(5, 1, 10) == pytest.approx(1 - (31 / 32) ** 10)
    with pytest.raises(ValidationError):
        random_sampling_success(3, 0, 1)
    with pytest.raises(ValidationError):
        random_sampling_success(3, 9, 1)


def test_sa_energies_match_bits(rng):
    """Test that each returned energy is the Ising energy of its returned bits"""
    n = 6
    p = IsingProblem(h=rng.normal(size=n), j={(a, b): float(rng.normal()) for a in range(n) for b in range(a + 1, n)})
    bits, energies = sa_batch(p, SaConfig(seed=3), 25)
    assert bits.shape == (25, n)
    for row, energy in zip(bits, energies):
        assert ising_energy(p, row) == pytest.approx(energy, abs=1e-9)
    assert np.all(energies >= brute_force_solve(p)[0] - 1e-9)


def test_sa_is_seeded(example_ising):
    """Test that a config seed fixes the run"""
    assert sa_run(example_ising, SaConfig(seed=4)) == sa_run(example_ising, SaConfig(seed=4))
    with pytest.raises(ValidationError):
        sa_batch(example_ising, SaConfig(), 0)


def test_sa_is_invariant_under_matched_scaling(rng):
    """Test that scaling h, J and both temperatures by the same factor reproduces the seeded chains"""
    n = 6
    p = IsingProblem(h=rng.normal(size=n), j={(a, b): float(rng.normal()) for a in range(n) for b in range(a + 1, n)})
    cfg = SaConfig(t0=5.0, tf=0.05, k=20)
    bits, energies = sa_batch(p, cfg, 40, rng=7)
    # powers of two keep every Metropolis ratio bit-identical
    for factor in (2.0, 0.25):
        scaled_cfg = SaConfig(t0=cfg.t0 * factor, tf=cfg.tf * factor, k=cfg.k)
        scaled_bits, scaled_energies = sa_batch(p.scaled(factor), scaled_cfg, 40, rng=7)
        np.testing.assert_array_equal(scaled_bits, bits)
        np.testing.assert_allclose(scaled_energies, factor * energies, atol=1e-12)
    assert sa_success_fraction(p, cfg, 200) == sa_success_fraction(p.scaled(4.0), SaConfig(t0=20.0, tf=0.2, k=20),
                                                                  200)


def test_sa_solves_the_worked_example(example_ising):
    """Test that annealing finds the unique ground state most of the time"""
    assert sa_success_fraction(example_ising, SaConfig(seed=1), 300) > 0.5
    bits, energy = sa_run(example_ising, SaConfig(seed=2, sweeps_per_step=5))
    assert energy >= -7.0 - 1e-9


def test_success_table_and_curve():
    """Test the per-problem table and the per-n medians, independent of the job count"""
    instances = generate(DatasetSpec(n_values=(3, 4), m=8, problems_per_n=3, master_seed=1))
    table = sa_success_table(instances, runs_per_problem=50, cfg=SaConfig(seed=6), jobs=1)
    assert list(table.columns) == ['n', 'problem_id', 'success_fraction', 'n_ground_states', 'random_success']
    assert len(table) == 6
    assert table['success_fraction'].between(0, 1).all()

    parallel = sa_success_table(instances, runs_per_problem=50, cfg=SaConfig(seed=6), jobs=2)
    assert table.equals(parallel)

    curve = success_curve_from_table(table)
    assert list(curve['n']) == [3, 4]
    assert curve.loc[0, 'success'] == pytest.approx(table[table['n'] == 3]['success_fraction'].median())


def test_success_curve_from_fresh_problems():
    """Test the one-call curve helper"""
    curve = sa_success_curve([3, 4], problems_per_n=2, runs_per_problem=20, cfg=SaConfig(seed=0), m=6)
    assert list(curve.columns) == ['n', 'success', 'success_mad', 'random_success']
    assert len(curve) == 2


@pytest.mark.slow
def test_annealing_outperforms_shallow_qaoa_at_ten_variables():
    """Test that SA's fitted per-query success beats p=1 QAOA success at n = 10"""
    spec = DatasetSpec(n_values=tuple(range(3, 11)), problems_per_n=5, master_seed=0)
    instances = generate(spec)
    table = sa_success_table(instances, runs_per_problem=1000, cfg=SaConfig(), jobs=1)
    curve = success_curve_from_table(table)
    fit = fit_success_model(list(zip(curve['n'], curve['success'])), k=10)
    sa_per_query = float(fit.per_query(10))

    qaoa_success = []
    for instance in [i for i in instances if i.n == 10]:
        record = run_qaoa(instance_to_ising(instance), 1, ExactBackend(), OptimizerConfig(budget=200), 5, seed=0)
        qaoa_success.append(record.success_prob)
    assert sa_per_query > float(np.median(qaoa_success))
