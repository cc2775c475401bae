# qaoa/experiment.py
"""
Experiment sweeps: every (instance, p, mode, shots, noise scale, repetition)
combination becomes one seeded task. Finished tasks are stored as JSON
records in a RunCache, so an interrupted sweep resumes where it stopped and
the result tables are a pure function of the stored records.
"""

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import pandas as pd

from backends.base import ExpectationBackend
from backends.noisy import NoisyBackend
from backends.shots import ShotBackend
from backends.statevector import ExactBackend
from baselines.random_sampling import random_sampling_success
from circuits.coupling import CouplingMap
from optimizer.imfil import OptimizerConfig
from problems.blls import BllsInstance
from problems.ising import brute_force_solve, has_mixed_ground_state, instance_to_ising
from qaoa.driver import ENERGY_REFERENCES, RunRecord, default_schedule, evaluate_at_angles, run_qaoa
from qaoa.params import QaoaParams
from simulator.noise import NoiseModel
from utils.caching import RunCache
from utils.error_handling import ValidationError
from utils.parallel import run_parallel
from utils.seeding import derive_seed
from utils.tables import median_mad, write_table

logger = logging.getLogger('qlslab.experiment')

MODES = ('exact', 'shots', 'noisy')
GROUP_KEYS = ['n', 'p', 'mode', 'shots', 'noise_scale']
# shots per noisy run when the noise scan re-measures noiseless angles
NOISE_SCAN_SHOTS = 8192
RESULT_COLUMNS = [
    'instance_id', 'n', 'p', 'mode', 'shots', 'noise_scale', 'coupling', 'repetition', 'seed', 'status',
    'angle_source', 'best_objective', 'exact_expectation', 'sampled_expectation', 'ground_energy',
    'n_ground_states', 'rel_error', 'sampled_rel_error', 'success_prob',
    'best_sampled_energy', 'best_sampled_bits', 'ground_hit', 'random_hit_prob', 'final_shots',
    'evaluations', 'converged', 'best_gamma', 'best_beta', 'trace_csv_path', 'error',
]
SUMMARY_COLUMNS = GROUP_KEYS + [
    'runs', 'rel_error_median', 'rel_error_mad', 'sampled_rel_error_median', 'sampled_rel_error_mad',
    'success_prob_median', 'success_prob_mad',
    'ground_hits', 'random_hits_expected',
]


def default_shot_values(n: int) -> Tuple[int, ...]:
    """{2^i | n-2 <= i <= n+2}"""
    return tuple(2 ** i for i in range(max(0, n - 2), n + 3))


@dataclass(frozen=True)
class ExperimentPlan:
    """
    Sweep definition.

    Empty `shots` means the default shot ladder per n for the sampling
    modes; exact mode always runs once with shots = None. `budget` and
    `starts` of None fall back to the per-depth schedule.

    With `noise_scan` the noisy runs do not optimize: each one re-measures
    the angles its exact-mode twin (same instance, p and repetition) found,
    with `final_shots` or NOISE_SCAN_SHOTS shots.
    """
    p_values: Tuple[int, ...] = (1,)
    modes: Tuple[str, ...] = ('exact',)
    shots: Tuple[int, ...] = ()
    repetitions: int = 1
    budget: Optional[int] = None
    starts: Optional[int] = None
    coupling: str = 'all'
    noise_scales: Tuple[float, ...] = (1.0,)
    master_seed: int = 0
    basis: bool = False
    energy_reference: str = 'hamiltonian'
    final_shots: Optional[int] = None
    noise_scan: bool = False
    out_dir: str = ''

    def __post_init__(self):
        for name in ('p_values', 'modes', 'shots', 'noise_scales'):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not self.p_values or any(int(p) < 1 for p in self.p_values):
            raise ValidationError("p values must be a nonempty list of depths >= 1", field='p_values')
        if not self.modes or any(m not in MODES for m in self.modes):
            raise ValidationError(f"modes must be a nonempty subset of {MODES}", field='modes')
        if any(int(s) < 1 for s in self.shots):
            raise ValidationError("shot values must be positive", field='shots')
        if not self.noise_scales or any(s < 0 for s in self.noise_scales):
            raise ValidationError("noise scales must be a nonempty list of non-negative values",
                                  field='noise_scales')
        if self.repetitions < 1:
            raise ValidationError("repetitions must be at least 1", field='repetitions')
        if self.energy_reference not in ENERGY_REFERENCES:
            raise ValidationError(f"energy_reference must be one of {ENERGY_REFERENCES}",
                                  field='energy_reference')
        if self.noise_scan and 'noisy' in self.modes and 'exact' not in self.modes:
            raise ValidationError("the noise scan takes its angles from exact mode; add 'exact' to the modes",
                                  field='modes')

    def schedule(self, p: int) -> Tuple[int, int]:
        starts, budget = default_schedule(p)
        return self.starts or starts, self.budget or budget

    def shot_values(self, n: int) -> Tuple[int, ...]:
        return tuple(int(s) for s in self.shots) or default_shot_values(n)

    def mode_shots(self, mode: str, n: int) -> Tuple[Optional[int], ...]:
        if mode == 'exact':
            return (None,)
        if mode == 'noisy' and self.noise_scan:
            return (int(self.final_shots or NOISE_SCAN_SHOTS),)
        return self.shot_values(n)


@dataclass(frozen=True)
class ExperimentTask:
    instance: BllsInstance = field(repr=False)
    p: int
    mode: str
    shots: Optional[int]
    noise_scale: Optional[float]
    repetition: int
    seed: int
    plan: ExperimentPlan = field(repr=False)
    angles: Optional[Tuple[Tuple[float, ...], Tuple[float, ...]]] = field(default=None, repr=False)

    @property
    def uses_noiseless_angles(self) -> bool:
        return self.mode == 'noisy' and self.plan.noise_scan

    def noiseless_source(self) -> 'ExperimentTask':
        """The exact-mode task whose optimized angles this task re-measures"""
        seed = derive_seed(self.plan.master_seed, self.instance.instance_id, self.p, 'exact', None, self.repetition)
        return ExperimentTask(self.instance, self.p, 'exact', None, None, self.repetition, seed, self.plan)

    @property
    def key(self) -> dict:
        starts, budget = self.plan.schedule(self.p)
        return {
            'instance_id': self.instance.instance_id,
            'p': self.p,
            'mode': self.mode,
            'shots': self.shots,
            'noise_scale': self.noise_scale,
            'coupling': self.plan.coupling if self.mode == 'noisy' else None,
            'basis': self.plan.basis if self.mode == 'noisy' else None,
            'repetition': self.repetition,
            'master_seed': self.plan.master_seed,
            'starts': starts,
            'budget': budget,
            'energy_reference': self.plan.energy_reference,
            'final_shots': self.plan.final_shots,
            'angle_source': 'fixed' if self.uses_noiseless_angles else 'optimized',
        }

    def backend(self) -> ExpectationBackend:
        if self.mode == 'exact':
            return ExactBackend()
        if self.mode == 'shots':
            return ShotBackend(self.shots)
        return NoisyBackend(NoiseModel(scale=self.noise_scale), self.shots,
                            coupling=CouplingMap.by_name(self.plan.coupling, self.instance.n),
                            rewrite_basis=self.plan.basis)


def plan_tasks(plan: ExperimentPlan, instances: Sequence[BllsInstance]) -> List[ExperimentTask]:
    """
    Expand the plan into tasks in a fixed order.

    The task seed depends on (master seed, instance, p, mode, shots,
    repetition) only, so runs that differ only in noise scale share their
    random streams.
    """
    tasks = []
    for instance in instances:
        mixed = None
        for p in plan.p_values:
            for mode in plan.modes:
                if mode == 'noisy':
                    if mixed is None:
                        mixed = has_mixed_ground_state(brute_force_solve(instance_to_ising(instance))[1])
                    if not mixed:
                        logger.debug(f"Skipping noisy runs on {instance.instance_id}: ground state is uniform")
                        continue
                shot_values = plan.mode_shots(mode, instance.n)
                scales = plan.noise_scales if mode == 'noisy' else (None,)
                for shots in shot_values:
                    for scale in scales:
                        for rep in range(plan.repetitions):
                            seed = derive_seed(plan.master_seed, instance.instance_id, int(p), mode, shots, rep)
                            tasks.append(ExperimentTask(instance, int(p), mode, shots, scale, rep, seed, plan))
    return tasks


def run_task(task: ExperimentTask) -> RunRecord:
    """Run one task; failures come back as a record with status 'failed'."""
    starts, budget = task.plan.schedule(task.p)
    try:
        if task.uses_noiseless_angles:
            if task.angles is None:
                raise ValidationError("no exact-mode angles to re-measure (exact run missing or failed)",
                                      field='angles')
            gamma, beta = task.angles
            record = evaluate_at_angles(instance_to_ising(task.instance), QaoaParams(list(gamma), list(beta)),
                                        task.backend(), task.seed, instance_id=task.instance.instance_id,
                                        final_shots=task.shots, energy_reference=task.plan.energy_reference,
                                        repetition=task.repetition)
        else:
            record = run_qaoa(instance_to_ising(task.instance), task.p, task.backend(),
                              OptimizerConfig(budget=budget), starts, task.seed,
                              instance_id=task.instance.instance_id, final_shots=task.plan.final_shots,
                              energy_reference=task.plan.energy_reference, repetition=task.repetition)
    except Exception as e:
        logger.error(f"Run {task.instance.instance_id} p={task.p} mode={task.mode} shots={task.shots} "
                     f"failed: {str(e)}", exc_info=True)
        return RunRecord(instance_id=task.instance.instance_id, n=task.instance.n, p=task.p, mode=task.mode,
                         shots=task.shots, seed=task.seed, noise_scale=task.noise_scale,
                         repetition=task.repetition, status='failed', error=str(e),
                         angle_source='fixed' if task.uses_noiseless_angles else 'optimized')
    # noise scale is only meaningful in noisy mode
    record.noise_scale = task.noise_scale
    return record


def _execute(args) -> dict:
    """Run a task and store it; failed records are returned but not stored, so a resumed sweep retries them."""
    task, out_dir = args
    out_dir = Path(out_dir)
    cache = RunCache(out_dir / 'runs')
    record = run_task(task)
    if record.trace:
        trace_name = f"traces/{cache.path_for(task.key).stem}.csv"
        write_table([{'eval_index': i, 'value': v} for i, v in record.trace], out_dir / trace_name, 'trace',
                    columns=['eval_index', 'value'])
        record.trace_csv_path = trace_name
    data = record.to_json_dict()
    if record.status == 'ok':
        cache.set(task.key, data)
    return data


def run_experiment(plan: ExperimentPlan, instances: Sequence[BllsInstance], out_dir,
                   jobs: Optional[int] = 1) -> List[dict]:
    """
    Run every task of the plan that has no stored record yet.

    Noise-scan tasks run after the rest, once the exact-mode angles they
    re-measure exist.

    Returns:
        Record dicts in task order, stored or freshly failed
    """
    out_dir = Path(out_dir)
    cache = RunCache(out_dir / 'runs')
    tasks = plan_tasks(plan, instances)
    records = {}
    for i, task in enumerate(tasks):
        stored = cache.get(task.key)
        if stored is not None:
            records[i] = stored
    pending = [i for i in range(len(tasks)) if i not in records]
    logger.info(f"Experiment: {len(tasks)} task(s), {len(tasks) - len(pending)} already stored, "
                f"{len(pending)} to run")

    first = [i for i in pending if not tasks[i].uses_noiseless_angles]
    for i, data in zip(first, run_parallel(_execute, [(tasks[i], str(out_dir)) for i in first], jobs)):
        records[i] = data

    second = [i for i in pending if tasks[i].uses_noiseless_angles]
    if second:
        by_path = {cache.path_for(tasks[i].key).stem: data for i, data in records.items()}
        scan_tasks = []
        for i in second:
            source = by_path.get(cache.path_for(tasks[i].noiseless_source().key).stem)
            if source is not None and source['status'] == 'ok':
                scan_tasks.append(replace(tasks[i], angles=(tuple(source['best_gamma']),
                                                            tuple(source['best_beta']))))
            else:
                scan_tasks.append(tasks[i])
        for i, data in zip(second, run_parallel(_execute, [(t, str(out_dir)) for t in scan_tasks], jobs)):
            records[i] = data

    ordered = [records[i] for i in range(len(tasks))]
    failed = sum(1 for r in ordered if r['status'] != 'ok')
    if failed:
        logger.warning(f"{failed} run(s) failed; see the log and the 'error' column")
    return ordered


def results_frame(records: Sequence[dict]) -> pd.DataFrame:
    """One row per run; list-valued fields are JSON-encoded."""
    rows = []
    for record in records:
        row = {column: record.get(column) for column in RESULT_COLUMNS}
        row['best_gamma'] = json.dumps(record.get('best_gamma') or [])
        row['best_beta'] = json.dumps(record.get('best_beta') or [])
        if record.get('status') == 'ok' and record.get('n_ground_states'):
            row['random_hit_prob'] = random_sampling_success(record['n'], record['n_ground_states'],
                                                             record['final_shots'])
        rows.append(row)
    return pd.DataFrame(rows, columns=RESULT_COLUMNS)


def summary_frame(results: pd.DataFrame) -> pd.DataFrame:
    """
    Median and MAD of rel_error, sampled_rel_error and success_prob per (n, p, mode, shots,
    noise_scale), with the number of runs whose final sample hit a ground
    state next to the number uniform sampling with the same shots would hit.
    """
    ok = results[results['status'] == 'ok'].copy()
    if ok.empty:
        return pd.DataFrame(columns=SUMMARY_COLUMNS)
    ok['ground_hit'] = ok['ground_hit'].astype(bool).astype(int)
    for column in ('shots', 'noise_scale', 'rel_error', 'sampled_rel_error', 'success_prob',
                   'random_hit_prob'):
        ok[column] = pd.to_numeric(ok[column])

    success = median_mad(ok, GROUP_KEYS, 'success_prob')
    rel = median_mad(ok.dropna(subset=['rel_error']), GROUP_KEYS, 'rel_error').drop(columns='runs')
    sampled = median_mad(ok.dropna(subset=['sampled_rel_error']), GROUP_KEYS,
                         'sampled_rel_error').drop(columns='runs')
    hits = ok.groupby(GROUP_KEYS, sort=True, dropna=False).agg(
        ground_hits=('ground_hit', 'sum'),
        random_hits_expected=('random_hit_prob', 'sum'),
    ).reset_index()
    summary = success
    for part in (rel, sampled, hits):
        summary = summary.merge(part, on=GROUP_KEYS, how='left')
    return summary.reindex(columns=SUMMARY_COLUMNS)


def write_experiment_tables(records: Sequence[dict], out_dir) -> List[Path]:
    out_dir = Path(out_dir)
    results = results_frame(records)
    return [
        write_table(results, out_dir / 'results.csv', 'results'),
        write_table(summary_frame(results), out_dir / 'summary.csv', 'summary'),
    ]
