# baselines/annealing.py
"""
Simulated annealing over Ising spins.

Exponential schedule T_i = T0 (Tf / T0)^(i / k). Each of the k steps
(i = 1..k) runs `sweeps_per_step` sweeps; a sweep proposes every single-spin
flip once, in a fresh random order, accepting with the Metropolis rule. The
best state seen (starting state included) is returned.
Many independent runs are simulated together as rows of one array.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from analysis.metrics import aggregate
from baselines.random_sampling import random_sampling_success
from data_sources.generator import DatasetSpec, generate_instance
from problems.blls import BllsInstance
from problems.ising import IsingProblem, SpinConvention, brute_force_solve, instance_to_ising
from utils.error_handling import ValidationError
from utils.parallel import run_parallel
from utils.seeding import derive_seed, make_rng

logger = logging.getLogger('qlslab.baselines')


@dataclass(frozen=True)
class SaConfig:
    t0: float = 100.0
    tf: float = 0.01
    k: int = 10
    sweeps_per_step: int = 1
    seed: int = 0

    def __post_init__(self):
        if not self.t0 > self.tf > 0:
            raise ValidationError("temperatures must satisfy t0 > tf > 0", field='t0')
        if self.k < 1 or self.sweeps_per_step < 1:
            raise ValidationError("k and sweeps_per_step must be at least 1", field='k')


def sa_schedule(cfg: SaConfig, i: int) -> float:
    """Temperature at step i, hitting t0 at i = 0 and tf at i = k exactly"""
    if not 0 <= i <= cfg.k:
        raise ValidationError(f"step index {i} outside 0..{cfg.k}", field='i')
    if i == 0:
        return cfg.t0
    if i == cfg.k:
        return cfg.tf
    return cfg.t0 * (cfg.tf / cfg.t0) ** (i / cfg.k)


def _energies(spins: np.ndarray, h: np.ndarray, coupling: np.ndarray) -> np.ndarray:
    return spins @ h + 0.5 * np.einsum('ri,ij,rj->r', spins, coupling, spins)


def sa_batch(p_ising: IsingProblem, cfg: SaConfig, runs: int, rng=None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Run `runs` independent annealing chains.

    Returns:
        (best_bits, best_energies): (runs, n) int array of measured-bit
        strings and the exact Ising energy of each
    """
    if runs < 1:
        raise ValidationError("runs must be at least 1", field='runs')
    rng = make_rng(cfg.seed if rng is None else rng)
    n = p_ising.n
    h = np.asarray(p_ising.h, dtype=float)
    coupling = p_ising.coupling_matrix()

    spins = 1.0 - 2.0 * rng.integers(0, 2, size=(runs, n))
    energy = _energies(spins, h, coupling)
    best_spins, best_energy = spins.copy(), energy.copy()
    rows = np.arange(runs)

    for i in range(1, cfg.k + 1):
        temperature = sa_schedule(cfg, i)
        for _ in range(cfg.sweeps_per_step):
            order = np.argsort(rng.random((runs, n)), axis=1)
            for t in range(n):
                j = order[:, t]
                local = h[j] + np.einsum('rk,rk->r', coupling[j], spins)
                delta = -2.0 * spins[rows, j] * local
                u = rng.random(runs)
                with np.errstate(over='ignore'):
                    accept = (delta <= 0) | (u < np.exp(-delta / temperature))
                spins[rows[accept], j[accept]] *= -1.0
                energy = energy + np.where(accept, delta, 0.0)
                better = energy < best_energy
                best_spins[better] = spins[better]
                best_energy[better] = energy[better]

    best_bits = ((1 - best_spins) // 2).astype(np.int64)
    return best_bits, _energies(best_spins, h, coupling)


def sa_run(p_ising: IsingProblem, cfg: SaConfig) -> Tuple[Tuple[int, ...], float]:
    """One annealing run: (best measured bits, best Ising energy)"""
    bits, energies = sa_batch(p_ising, cfg, 1)
    return tuple(int(b) for b in bits[0]), float(energies[0])


def sa_success_fraction(p_ising: IsingProblem, cfg: SaConfig, runs: int,
                        ground_bits: Optional[frozenset] = None) -> float:
    """Fraction of `runs` seeded chains whose best state is a ground state"""
    if ground_bits is None:
        _, ground_bits = brute_force_solve(p_ising)
    bits, _ = sa_batch(p_ising, cfg, runs)
    ground = {SpinConvention.bits_to_index(b) for b in ground_bits}
    weights = 1 << np.arange(p_ising.n, dtype=np.int64)
    hits = np.isin(bits @ weights, list(ground))
    return float(hits.mean())


def _problem_task(args) -> dict:
    instance, cfg, runs = args
    p_ising = instance_to_ising(instance)
    _, ground_bits = brute_force_solve(p_ising)
    run_cfg = SaConfig(cfg.t0, cfg.tf, cfg.k, cfg.sweeps_per_step, derive_seed(cfg.seed, instance.instance_id))
    success = sa_success_fraction(p_ising, run_cfg, runs, ground_bits)
    return {
        'n': instance.n,
        'problem_id': instance.instance_id,
        'success_fraction': success,
        'n_ground_states': len(ground_bits),
        'random_success': random_sampling_success(instance.n, len(ground_bits), 1),
    }


def sa_success_table(instances: Sequence[BllsInstance], runs_per_problem: int = 1000,
                     cfg: SaConfig = SaConfig(), jobs: Optional[int] = 1) -> pd.DataFrame:
    """Per-problem SA success fractions (n, problem_id, success_fraction, ...)"""
    rows = run_parallel(_problem_task, [(inst, cfg, runs_per_problem) for inst in instances], jobs)
    return pd.DataFrame(rows, columns=['n', 'problem_id', 'success_fraction', 'n_ground_states', 'random_success'])


def sa_success_curve(n_range: Sequence[int], problems_per_n: int, runs_per_problem: int = 1000,
                     cfg: SaConfig = SaConfig(), master_seed: int = 0, m: int = 40, density: float = 0.2,
                     jobs: Optional[int] = 1) -> pd.DataFrame:
    """
    Median SA cumulative success probability per n over freshly generated problems.

    Returns:
        DataFrame with columns n, success (median), success_mad, random_success (median)
    """
    spec = DatasetSpec(n_values=tuple(n_range), m=m, density=density, problems_per_n=problems_per_n,
                       master_seed=master_seed)
    instances = [generate_instance(spec, n, i) for n in spec.n_values for i in range(problems_per_n)]
    table = sa_success_table(instances, runs_per_problem, cfg, jobs)
    return success_curve_from_table(table)


def success_curve_from_table(table: pd.DataFrame) -> pd.DataFrame:
    rows: List[dict] = []
    for n, group in table.groupby('n', sort=True):
        median, mad = aggregate(group['success_fraction'])
        rows.append({
            'n': int(n),
            'success': median,
            'success_mad': mad,
            'random_success': float(group['random_success'].median()),
        })
    logger.info(f"SA success curve over n = {[r['n'] for r in rows]}")
    return pd.DataFrame(rows, columns=['n', 'success', 'success_mad', 'random_success'])
