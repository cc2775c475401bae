"""Tests for QAOA angles, measurement backends, the optimization driver and experiment sweeps."""

import numpy as np
import pytest

from backends.noisy import NoisyBackend
from backends.shots import ShotBackend
from backends.statevector import ExactBackend
from circuits.coupling import CouplingMap
from data_sources.generator import DatasetSpec, generate
from optimizer.imfil import OptimizerConfig
from problems.ising import brute_force_solve, instance_to_ising, ising_energy
from qaoa.driver import (RunRecord, default_schedule, evaluate_at_angles, objective, run_qaoa,
                         success_probability)
from qaoa.experiment import (NOISE_SCAN_SHOTS, ExperimentPlan, default_shot_values, plan_tasks, results_frame,
                             run_experiment, summary_frame, write_experiment_tables)
from qaoa.params import BETA_MAX, GAMMA_MAX, QaoaParams
from simulator.noise import NoiseModel
from utils.caching import RunCache
from utils.error_handling import ValidationError

SMALL = OptimizerConfig(budget=60)


def test_params_vector_layout():
    """Test the [gamma..., beta...] optimizer layout and the angle box"""
    params = QaoaParams([0.1, 0.2], [0.3, 0.4])
    np.testing.assert_array_equal(params.to_vector(), [0.1, 0.2, 0.3, 0.4])
    assert QaoaParams.from_vector(params.to_vector()) == params
    lower, upper = QaoaParams.box(2)
    np.testing.assert_array_equal(upper, [GAMMA_MAX, GAMMA_MAX, BETA_MAX, BETA_MAX])
    assert QaoaParams.zeros(3).p == 3

    with pytest.raises(ValidationError):
        QaoaParams([0.1], [0.1, 0.2])
    with pytest.raises(ValidationError):
        QaoaParams.from_vector([0.1, 0.2, 0.3])
    with pytest.raises(ValidationError):
        QaoaParams([1.0], [4.0]).check_bounds()


def test_exact_objective_at_zero_gamma(example_ising):
    """Test that the uniform state has zero energy"""
    assert objective(example_ising, QaoaParams([0.0], [1.0]), ExactBackend(), 0) == pytest.approx(0.0, abs=1e-12)


def test_shot_backend_is_seeded(example_ising):
    """Test the shot backend's reproducibility and unbiasedness"""
    backend = ShotBackend(128)
    params = QaoaParams([0.6], [0.4])
    assert backend.expectation(example_ising, params, 5) == backend.expectation(example_ising, params, 5)
    exact = ExactBackend().expectation(example_ising, params)
    estimates = [backend.expectation(example_ising, params, seed) for seed in range(200)]
    assert np.mean(estimates) == pytest.approx(exact, abs=0.5)
    with pytest.raises(ValidationError):
        ShotBackend(0)


def test_noisy_backend_without_noise_matches_exact(example_ising):
    """Test that a zero-noise, routed backend estimates the exact energy"""
    params = QaoaParams([0.6], [0.4])
    exact = ExactBackend().expectation(example_ising, params)
    backend = NoisyBackend(NoiseModel(scale=0.0), 4096, coupling=CouplingMap.line(3), rewrite_basis=True)
    assert backend.expectation(example_ising, params, 1) == pytest.approx(exact, abs=0.3)
    assert backend.describe()['coupling'] == 'line'
    assert backend.sample(example_ising, params, 100, 2).shots == 100


def test_success_probability_of_uniform_state(example_ising):
    """Test that gamma = beta = 0 gives the uniform-sampling success"""
    assert success_probability(example_ising, QaoaParams([0.0], [0.0])) == pytest.approx(1 / 8)


def test_run_qaoa_on_worked_example(example_ising):
    """Test an exact-mode run end to end"""
    record = run_qaoa(example_ising, 1, ExactBackend(), SMALL, 4, seed=21, instance_id='example')
    assert record.status == 'ok'
    assert record.ground_energy == pytest.approx(-7.0)
    assert record.n_ground_states == 1
    assert record.exact_expectation >= record.ground_energy - 1e-9
    assert record.rel_error == pytest.approx(abs((record.exact_expectation + 7.0) / 7.0))
    assert record.rel_error < 1.0
    assert record.success_prob > 1 / 8
    assert record.final_shots == 1024
    assert sum(record.final_counts.values()) == 1024
    assert record.ground_hit == ('001' in record.final_counts)
    assert 0 < record.evaluations <= SMALL.budget
    assert len(record.best_gamma) == len(record.best_beta) == 1
    assert record.angle_source == 'optimized'
    assert record.sampled_expectation == pytest.approx(
        sum(ising_energy(example_ising, bits) * c for bits, c in record.final_counts.items()) / 1024)
    assert record.sampled_rel_error == pytest.approx(abs((record.sampled_expectation + 7.0) / 7.0))


def test_run_qaoa_is_deterministic(example_ising):
    """Test that a seed fixes the whole record"""
    backend = ShotBackend(64)
    first = run_qaoa(example_ising, 1, backend, SMALL, 2, seed=8)
    second = run_qaoa(example_ising, 1, ShotBackend(64), SMALL, 2, seed=8)
    assert first.to_json_dict() == second.to_json_dict()
    assert first.shots == 64 and first.final_shots == 64


def test_residual_energy_reference(example_instance, example_ising):
    """Test that the residual reference adds the offset to both energies"""
    record = run_qaoa(example_ising, 1, ExactBackend(), SMALL, 2, seed=3, energy_reference='residual')
    shifted_ground = record.ground_energy + example_ising.offset
    expected = abs((record.exact_expectation + example_ising.offset - shifted_ground) / shifted_ground)
    assert record.rel_error == pytest.approx(expected)
    with pytest.raises(ValidationError):
        run_qaoa(example_ising, 1, ExactBackend(), SMALL, 1, seed=0, energy_reference='bogus')
    with pytest.raises(ValidationError):
        run_qaoa(example_ising, 0, ExactBackend(), SMALL, 1, seed=0)


def test_record_json_round_trip_drops_trace(example_ising):
    """Test that records serialize without their trace and with finite values only"""
    record = run_qaoa(example_ising, 1, ExactBackend(), OptimizerConfig(budget=10), 1, seed=0)
    data = record.to_json_dict()
    assert 'trace' not in data
    restored = RunRecord.from_json_dict(data)
    assert restored.best_gamma == record.best_gamma
    assert restored.trace == []


def test_evaluate_at_angles_skips_optimization(example_ising):
    """Test that fixed angles are measured as given and recorded as such"""
    params = QaoaParams([0.6], [0.4])
    backend = NoisyBackend(NoiseModel(scale=0.5), 2048)
    record = evaluate_at_angles(example_ising, params, backend, 9, instance_id='example')
    assert record.angle_source == 'fixed'
    assert record.evaluations == 0 and record.trace == []
    assert record.best_objective is None
    assert record.best_gamma == [0.6] and record.best_beta == [0.4]
    assert record.exact_expectation == pytest.approx(ExactBackend().expectation(example_ising, params))
    assert record.final_shots == 2048 and record.noise_scale == 0.5
    assert record.sampled_rel_error == pytest.approx(abs((record.sampled_expectation + 7.0) / 7.0))
    assert record.to_json_dict() == evaluate_at_angles(example_ising, params, backend, 9,
                                                       instance_id='example').to_json_dict()


def test_default_schedule():
    """Test the per-depth starts and budgets"""
    assert default_schedule(1) == (20, 200)
    assert default_schedule(2) == (40, 200)
    assert default_schedule(3) == (60, 400)
    assert default_shot_values(4) == (4, 8, 16, 32, 64)
    assert default_shot_values(1) == (1, 2, 4, 8)


def small_suite(count=2, n_values=(3,)):
    return generate(DatasetSpec(n_values=n_values, m=6, problems_per_n=count, master_seed=4))


def test_plan_tasks_expands_sweeps():
    """Test the task grid and seed independence from noise scale"""
    instances = small_suite()
    plan = ExperimentPlan(p_values=(1, 2), modes=('exact', 'shots'), shots=(8, 16), repetitions=2)
    tasks = plan_tasks(plan, instances)
    # per instance and p: 2 exact reps + 2 shot values x 2 reps
    assert len(tasks) == 2 * 2 * (2 + 4)
    assert len({t.seed for t in tasks}) == len(tasks)

    noisy = plan_tasks(ExperimentPlan(modes=('noisy',), shots=(8,), noise_scales=(1.0, 0.5)), instances)
    for a, b in zip(noisy[::2], noisy[1::2]):
        assert a.seed == b.seed and a.noise_scale != b.noise_scale

    with pytest.raises(ValidationError):
        ExperimentPlan(modes=('quantum',))
    with pytest.raises(ValidationError):
        ExperimentPlan(p_values=())


def test_noisy_runs_skip_uniform_ground_states():
    """Test that noisy tasks only use instances whose ground bits are mixed"""
    instances = small_suite(count=6)
    tasks = plan_tasks(ExperimentPlan(modes=('noisy',), shots=(8,)), instances)
    for task in tasks:
        ground = brute_force_solve(instance_to_ising(task.instance))[1]
        assert all(0 < sum(bits) < len(bits) for bits in ground)


def test_experiment_resumes_identically(tmp_path):
    """Test that a resumed sweep writes the same tables as an uninterrupted one"""
    instances = small_suite()
    plan = ExperimentPlan(modes=('exact', 'shots'), shots=(8,), budget=20, starts=2, master_seed=5)

    full_dir, resumed_dir = tmp_path / 'full', tmp_path / 'resumed'
    full = run_experiment(plan, instances, full_dir)
    paths = write_experiment_tables(full, full_dir)

    run_experiment(plan, instances[:1], resumed_dir)
    resumed = run_experiment(plan, instances, resumed_dir)
    resumed_paths = write_experiment_tables(resumed, resumed_dir)

    for a, b in zip(paths, resumed_paths):
        assert a.read_bytes() == b.read_bytes()
    assert all(r['status'] == 'ok' for r in full)
    assert all((full_dir / r['trace_csv_path']).exists() for r in full)


def test_summary_frame_groups_and_counts(tmp_path):
    """Test the per-group medians and the ground-hit columns"""
    instances = small_suite()
    plan = ExperimentPlan(modes=('exact',), budget=20, starts=2)
    results = results_frame(run_experiment(plan, instances, tmp_path))
    summary = summary_frame(results)
    assert len(summary) == 1
    row = summary.iloc[0]
    assert row['runs'] == 2
    assert row['success_prob_median'] == pytest.approx(results['success_prob'].median())
    assert 0 <= row['ground_hits'] <= 2
    assert 0 < row['random_hits_expected'] <= 2


def test_failed_runs_are_recorded(tmp_path, monkeypatch):
    """Test that one failing run is stored as failed and the sweep continues"""
    import qaoa.experiment as experiment

    real_run = experiment.run_qaoa
    instances = small_suite()
    bad_id = instances[0].instance_id

    def flaky(p_ising, p, mode, cfg, n_starts, seed, instance_id='', **kwargs):
        if instance_id == bad_id:
            raise RuntimeError('simulated failure')
        return real_run(p_ising, p, mode, cfg, n_starts, seed, instance_id=instance_id, **kwargs)

    monkeypatch.setattr(experiment, 'run_qaoa', flaky)
    records = run_experiment(ExperimentPlan(budget=10, starts=1), instances, tmp_path)
    statuses = {r['instance_id']: r['status'] for r in records}
    assert statuses[bad_id] == 'failed'
    assert statuses[instances[1].instance_id] == 'ok'
    summary = summary_frame(results_frame(records))
    assert summary.iloc[0]['runs'] == 1


def test_failed_runs_are_retried_on_resume(tmp_path, monkeypatch):
    """Test that failed runs are not stored, so resuming the sweep runs them again"""
    import qaoa.experiment as experiment

    real_run = experiment.run_qaoa
    instances = small_suite()
    bad_id = instances[0].instance_id
    plan = ExperimentPlan(budget=10, starts=1)

    def flaky(p_ising, p, mode, cfg, n_starts, seed, instance_id='', **kwargs):
        if instance_id == bad_id:
            raise RuntimeError('simulated failure')
        return real_run(p_ising, p, mode, cfg, n_starts, seed, instance_id=instance_id, **kwargs)

    monkeypatch.setattr(experiment, 'run_qaoa', flaky)
    first = run_experiment(plan, instances, tmp_path)
    assert [r['status'] for r in first] == ['failed', 'ok']
    bad_task = plan_tasks(plan, instances)[0]
    assert RunCache(tmp_path / 'runs').get(bad_task.key) is None

    monkeypatch.undo()
    second = run_experiment(plan, instances, tmp_path)
    assert [r['status'] for r in second] == ['ok', 'ok']
    assert second[1] == first[1]
    assert RunCache(tmp_path / 'runs').get(bad_task.key) == second[0]


def test_noise_scan_reuses_exact_angles(tmp_path):
    """Test that scan runs re-measure the exact-mode angles under each noise scale"""
    instances = small_suite(count=6)
    plan = ExperimentPlan(modes=('exact', 'noisy'), noise_scales=(0.0, 1.0), budget=10, starts=1,
                          noise_scan=True, final_shots=256)
    records = run_experiment(plan, instances, tmp_path)
    exact = {r['instance_id']: r for r in records if r['mode'] == 'exact'}
    noisy = [r for r in records if r['mode'] == 'noisy']
    assert noisy
    for record in noisy:
        source = exact[record['instance_id']]
        assert record['status'] == 'ok'
        assert record['angle_source'] == 'fixed'
        assert record['evaluations'] == 0
        assert (record['best_gamma'], record['best_beta']) == (source['best_gamma'], source['best_beta'])
        assert record['exact_expectation'] == pytest.approx(source['exact_expectation'])
        assert record['shots'] == record['final_shots'] == 256
        assert record['sampled_rel_error'] is not None
    assert all(r['angle_source'] == 'optimized' for r in exact.values())

    summary = summary_frame(results_frame(records))
    noisy_rows = summary[summary['mode'] == 'noisy']
    assert noisy_rows['noise_scale'].tolist() == [0.0, 1.0]
    assert noisy_rows['sampled_rel_error_median'].notna().all()

    default_shots = plan_tasks(ExperimentPlan(modes=('exact', 'noisy'), noise_scan=True), instances)
    assert {t.shots for t in default_shots if t.mode == 'noisy'} == {NOISE_SCAN_SHOTS}
    with pytest.raises(ValidationError):
        ExperimentPlan(modes=('noisy',), noise_scan=True)


@pytest.mark.slow
def test_qaoa_beats_uniform_sampling():
    """Test that optimized p=1 success beats uniform guessing on most small problems"""
    instances = generate(DatasetSpec(n_values=(3, 4, 5), problems_per_n=5, master_seed=0))
    wins = 0
    for instance in instances:
        p_ising = instance_to_ising(instance)
        record = run_qaoa(p_ising, 1, ExactBackend(), OptimizerConfig(budget=200), 20, seed=1,
                          instance_id=instance.instance_id)
        if record.success_prob > record.n_ground_states / 2 ** instance.n:
            wins += 1
    assert wins >= 0.9 * len(instances)


@pytest.mark.slow
def test_deeper_circuits_do_not_hurt():
    """Test that the median relative error at p=2 is no worse than at p=1"""
    instances = generate(DatasetSpec(n_values=(3, 4, 5), problems_per_n=5, master_seed=0))
    medians = {}
    for p in (1, 2):
        errors = []
        for instance in instances:
            starts, budget = default_schedule(p)
            record = run_qaoa(instance_to_ising(instance), p, ExactBackend(), OptimizerConfig(budget=budget),
                              starts, seed=2, instance_id=instance.instance_id)
            errors.append(record.rel_error)
        medians[p] = float(np.median(errors))
    assert medians[2] <= medians[1]


@pytest.mark.slow
def test_shot_estimates_converge_to_exact():
    """Test that shot-mode means stay within 5 sigma of the exact energy at fixed angles"""
    instance = generate(DatasetSpec(n_values=(5,), problems_per_n=1, master_seed=0))[0]
    p_ising = instance_to_ising(instance)
    params = run_qaoa(p_ising, 1, ExactBackend(), OptimizerConfig(budget=100), 5, seed=0)
    params = QaoaParams(params.best_gamma, params.best_beta)
    exact = ExactBackend().expectation(p_ising, params)
    for shots in (2 ** 3, 2 ** 5, 2 ** 7):
        backend = ShotBackend(shots)
        estimates = np.array([backend.expectation(p_ising, params, seed) for seed in range(50)])
        sigma = estimates.std(ddof=1) / np.sqrt(len(estimates))
        assert abs(estimates.mean() - exact) <= 5 * sigma + 1e-12


@pytest.mark.slow
def test_noise_monotonicity_and_coupling(tmp_path):
    """Test that the median sampled error falls with every halving of the noise and all-to-all beats a line"""
    instances = [inst for inst in generate(DatasetSpec(n_values=(5,), problems_per_n=40, master_seed=0))
                 if all(0 < sum(b) < 5 for b in brute_force_solve(instance_to_ising(inst))[1])][:10]
    assert len(instances) == 10
    scales = tuple(2.0 ** -k for k in range(8))

    def medians(coupling, noise_scales):
        plan = ExperimentPlan(modes=('exact', 'noisy'), noise_scales=noise_scales, budget=100, starts=5,
                              coupling=coupling, noise_scan=True)
        results = results_frame(run_experiment(plan, instances, tmp_path / coupling))
        noisy = results[results['mode'] == 'noisy']
        assert (noisy['status'] == 'ok').all() and len(noisy) == 10 * len(noise_scales)
        assert (noisy['shots'] == NOISE_SCAN_SHOTS).all()
        return noisy.groupby('noise_scale')['sampled_rel_error'].median()

    by_scale = medians('all', scales)
    ladder = [by_scale[s] for s in scales]
    assert all(b < a for a, b in zip(ladder, ladder[1:]))
    assert medians('line', (1.0,))[1.0] > by_scale[1.0]
