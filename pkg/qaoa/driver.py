# qaoa/driver.py
"""
QAOA end to end: optimize the angles against a measurement backend, then
re-evaluate the winner on the exact statevector and record the metrics.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from analysis.metrics import relative_error
from backends.base import ExpectationBackend
from backends.statevector import ExactBackend
from optimizer.imfil import BoxBounds, OptimizerConfig, multi_start_minimize
from problems.ising import IsingProblem, brute_force_solve, ground_indices, SpinConvention
from qaoa.params import QaoaParams
from simulator.sampling import best_sampled, expectation_from_samples
from simulator.statevector import qaoa_state_fast
from utils.error_handling import ValidationError
from utils.seeding import derive_seed

logger = logging.getLogger('qlslab.qaoa')

# starts and budget per depth; deeper circuits get more of both
DEFAULT_STARTS = {1: 20, 2: 40, 3: 60}
DEFAULT_BUDGET = {1: 200, 2: 200, 3: 400}
DEFAULT_FINAL_SHOTS = 1024
ENERGY_REFERENCES = ('hamiltonian', 'residual')


def default_schedule(p: int) -> Tuple[int, int]:
    """(n_starts, budget) for depth p"""
    return DEFAULT_STARTS.get(p, 60), DEFAULT_BUDGET.get(p, 400)


@dataclass
class RunRecord:
    instance_id: str
    n: int
    p: int
    mode: str
    shots: Optional[int]
    seed: int
    best_gamma: List[float] = field(default_factory=list)
    best_beta: List[float] = field(default_factory=list)
    best_objective: Optional[float] = None
    exact_expectation: Optional[float] = None
    sampled_expectation: Optional[float] = None
    ground_energy: Optional[float] = None
    n_ground_states: Optional[int] = None
    rel_error: Optional[float] = None
    sampled_rel_error: Optional[float] = None
    success_prob: Optional[float] = None
    best_sampled_energy: Optional[float] = None
    best_sampled_bits: Optional[str] = None
    ground_hit: Optional[bool] = None
    final_counts: Dict[str, int] = field(default_factory=dict)
    final_shots: Optional[int] = None
    evaluations: int = 0
    converged: bool = False
    noise_scale: Optional[float] = None
    coupling: Optional[str] = None
    repetition: int = 0
    angle_source: str = 'optimized'
    status: str = 'ok'
    error: Optional[str] = None
    trace_csv_path: Optional[str] = None
    trace: List[Tuple[int, float]] = field(default_factory=list, repr=False)

    def to_json_dict(self) -> dict:
        data = asdict(self)
        data.pop('trace')
        for key, value in data.items():
            if isinstance(value, float) and not math.isfinite(value):
                data[key] = None
        return data

    @classmethod
    def from_json_dict(cls, data: dict) -> 'RunRecord':
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__ and k != 'trace'}
        return cls(**known)


def objective(p_ising: IsingProblem, params: QaoaParams, mode: ExpectationBackend, seed) -> float:
    """Energy estimate of the QAOA state at `params` measured by `mode`."""
    return mode.expectation(p_ising, params, seed)


def success_probability(p_ising: IsingProblem, params: QaoaParams,
                        ground_bits: Optional[FrozenSet[Tuple[int, ...]]] = None) -> float:
    """Exact probability mass on ground-state bitstrings."""
    if ground_bits is None:
        _, ground_bits = brute_force_solve(p_ising)
    probs = qaoa_state_fast(p_ising, params).probabilities()
    return float(min(1.0, probs[ground_indices(ground_bits)].sum()))


def run_qaoa(p_ising: IsingProblem, p: int, mode: ExpectationBackend, cfg: OptimizerConfig,
             n_starts: int, seed: int, instance_id: str = '', final_shots: Optional[int] = None,
             energy_reference: str = 'hamiltonian', repetition: int = 0) -> RunRecord:
    """
    Optimize p-layer QAOA angles for one problem and record the outcome.

    Args:
        p_ising: Cost function
        p: Number of QAOA layers
        mode: Backend used inside the optimization loop
        cfg: Per-start optimizer settings
        n_starts: Random starting points
        seed: Master seed of the run; every evaluation derives its own stream
        instance_id: Label stored in the record
        final_shots: Shots for the final measurement (defaults to the backend's shots, or 1024)
        energy_reference: 'hamiltonian' compares <C> with E_gs; 'residual' adds the Ising offset to both
        repetition: Repetition index stored in the record

    Returns:
        RunRecord with status 'ok'
    """
    if int(p) < 1:
        raise ValidationError("QAOA depth p must be at least 1", field='p')
    if energy_reference not in ENERGY_REFERENCES:
        raise ValidationError(f"energy_reference must be one of {ENERGY_REFERENCES}", field='energy_reference')

    lower, upper = QaoaParams.box(p)
    bounds = BoxBounds(lower, upper)

    def objective_for_start(start_index: int):
        counter = {'k': 0}

        def f(x: np.ndarray) -> float:
            eval_seed = derive_seed(seed, 'eval', start_index, counter['k'])
            counter['k'] += 1
            return objective(p_ising, QaoaParams.from_vector(x), mode, eval_seed)
        return f

    logger.info(f"QAOA {instance_id or '<anon>'}: n={p_ising.n} p={p} mode={mode.mode_name} "
                f"starts={n_starts} budget={cfg.budget}")
    result = multi_start_minimize(None, bounds, cfg, n_starts, seed=derive_seed(seed, 'starts'),
                                  objective_factory=objective_for_start)
    record = _measure(p_ising, QaoaParams.from_vector(result.best_point), mode, seed, instance_id,
                      final_shots, energy_reference, repetition)
    record.best_objective = result.best_value
    record.evaluations = result.evaluations_used
    record.converged = result.converged
    record.trace = list(result.trace)
    return record


def evaluate_at_angles(p_ising: IsingProblem, params: QaoaParams, mode: ExpectationBackend, seed: int,
                       instance_id: str = '', final_shots: Optional[int] = None,
                       energy_reference: str = 'hamiltonian', repetition: int = 0) -> RunRecord:
    """
    Measure given angles without optimizing, e.g. angles found noiselessly
    re-run under a noise model. The record has angle_source 'fixed' and no
    optimizer evaluations.
    """
    if energy_reference not in ENERGY_REFERENCES:
        raise ValidationError(f"energy_reference must be one of {ENERGY_REFERENCES}", field='energy_reference')
    logger.info(f"Fixed angles {instance_id or '<anon>'}: n={p_ising.n} p={params.p} mode={mode.mode_name}")
    record = _measure(p_ising, params, mode, seed, instance_id, final_shots, energy_reference, repetition)
    record.angle_source = 'fixed'
    return record


def _relative_or_none(value: float, ground_energy: float, instance_id: str) -> Optional[float]:
    try:
        return relative_error(value, ground_energy)
    except ValidationError:
        logger.warning(f"Zero reference ground energy for {instance_id or '<anon>'}; relative error left empty")
        return None


def _measure(p_ising: IsingProblem, best: QaoaParams, mode: ExpectationBackend, seed: int, instance_id: str,
             final_shots: Optional[int], energy_reference: str, repetition: int) -> RunRecord:
    """Exact and sampled metrics of the state at `best`"""
    ground_energy, ground_bits = brute_force_solve(p_ising)
    exact = ExactBackend().expectation(p_ising, best)
    shift = p_ising.offset if energy_reference == 'residual' else 0.0

    shots = int(final_shots or mode.shots or DEFAULT_FINAL_SHOTS)
    counts = mode.sample(p_ising, best, shots, derive_seed(seed, 'final'))
    sampled = expectation_from_samples(p_ising, counts)
    best_bits, best_energy = best_sampled(p_ising, counts)
    ground_strings = {SpinConvention.format_bits(b) for b in ground_bits}

    info = mode.describe()
    record = RunRecord(
        instance_id=instance_id,
        n=p_ising.n,
        p=best.p,
        mode=mode.mode_name,
        shots=mode.shots,
        seed=int(seed),
        best_gamma=list(best.gamma),
        best_beta=list(best.beta),
        exact_expectation=exact,
        sampled_expectation=sampled,
        ground_energy=ground_energy,
        n_ground_states=len(ground_bits),
        rel_error=_relative_or_none(exact + shift, ground_energy + shift, instance_id),
        sampled_rel_error=_relative_or_none(sampled + shift, ground_energy + shift, instance_id),
        success_prob=success_probability(p_ising, best, ground_bits),
        best_sampled_energy=best_energy,
        best_sampled_bits=best_bits,
        ground_hit=any(bits in ground_strings for bits in counts.counts),
        final_counts=dict(counts.counts),
        final_shots=shots,
        noise_scale=info.get('noise_scale'),
        coupling=info.get('coupling'),
        repetition=int(repetition),
    )
    logger.info(f"QAOA {instance_id or '<anon>'}: <C>={exact:.6g} sampled={sampled:.6g} "
                f"E_gs={ground_energy:.6g} success={record.success_prob:.4f}")
    return record
