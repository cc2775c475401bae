# optimizer/imfil.py
"""
Implicit filtering: bounded derivative-free minimization for noisy objectives.

For each stencil scale h (a fraction of the box width) the optimizer samples
the central-difference coordinate stencil around the current point, forms a
stencil gradient from the clipped points and tries a projected line search
along it. When no stencil point improves on the current value the stencil
has failed and the scale shrinks. Runs stop when the scales or the
evaluation budget are exhausted.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from utils.error_handling import OptimizationError, ValidationError
from utils.seeding import make_rng
from utils.tables import write_table

logger = logging.getLogger('qlslab.optimizer')

Objective = Callable[[np.ndarray], float]

DEFAULT_SCALES = tuple(2.0 ** -k for k in range(1, 8))


@dataclass(frozen=True, eq=False)
class BoxBounds:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.array(self.lower, dtype=float).reshape(-1)
        upper = np.array(self.upper, dtype=float).reshape(-1)
        if lower.shape != upper.shape or lower.size == 0:
            raise ValidationError("lower and upper bounds must be nonempty vectors of equal length",
                                  field='bounds')
        if not np.all(lower < upper):
            raise ValidationError("every lower bound must be strictly below its upper bound", field='bounds')
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return x.shape == self.lower.shape and bool(np.all((x >= self.lower) & (x <= self.upper)))

    def clip(self, x) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def random_point(self, rng: np.random.Generator) -> np.ndarray:
        return self.lower + rng.random(self.dim) * self.width


@dataclass(frozen=True)
class OptimizerConfig:
    budget: int = 200
    scales: Tuple[float, ...] = DEFAULT_SCALES
    stencil_tolerance: float = 0.0
    max_halvings: int = 5
    seed: int = 0

    def __post_init__(self):
        if int(self.budget) < 1:
            raise ValidationError("budget must be at least 1", field='budget')
        scales = tuple(float(s) for s in self.scales)
        if not scales or any(not 0.0 < s <= 1.0 for s in scales):
            raise ValidationError("scales must lie in (0, 1]", field='scales')
        if any(b >= a for a, b in zip(scales, scales[1:])):
            raise ValidationError("scales must be strictly decreasing", field='scales')
        if self.stencil_tolerance < 0 or self.max_halvings < 0:
            raise ValidationError("stencil tolerance and halvings must be non-negative", field='scales')
        object.__setattr__(self, 'scales', scales)


@dataclass
class OptimizationResult:
    best_point: np.ndarray
    best_value: float
    trace: List[Tuple[int, float]] = field(default_factory=list)
    evaluations_used: int = 0
    converged: bool = False
    start_index: int = 0

    def trace_rows(self):
        return [{'eval_index': i, 'value': v} for i, v in self.trace]

    def write_trace(self, path):
        return write_table(self.trace_rows(), path, 'trace', columns=['eval_index', 'value'])


class _BudgetExhausted(Exception):
    pass


class _TrackedObjective:
    """Counts evaluations against the budget and remembers the best point"""

    def __init__(self, f: Objective, bounds: BoxBounds, budget: int):
        self.f = f
        self.bounds = bounds
        self.budget = budget
        self.trace: List[Tuple[int, float]] = []
        self.best_point: Optional[np.ndarray] = None
        self.best_value = math.inf

    def __call__(self, x: np.ndarray) -> float:
        if len(self.trace) >= self.budget:
            raise _BudgetExhausted()
        if not self.bounds.contains(x):
            # never hand the objective a point outside the box
            raise OptimizationError(f"internal error: point {x} left the box", point=x)
        value = float(self.f(np.array(x, dtype=float)))
        if not math.isfinite(value):
            logger.warning(f"Objective returned {value} at {x}; treated as +inf")
            value = math.inf
        self.trace.append((len(self.trace), value))
        if value < self.best_value:
            self.best_value = value
            self.best_point = np.array(x, dtype=float)
        return value


def _stencil(objective: _TrackedObjective, bounds: BoxBounds, x: np.ndarray, fx: float, step: np.ndarray):
    """
    Evaluate x +/- step_i e_i (clipped) for each coordinate, + before -.

    Returns:
        (points, values, gradient) where gradient uses the actual clipped offsets
    """
    points, values = [], []
    gradient = np.zeros_like(x)
    for i in range(bounds.dim):
        side = {}
        for sign in (1.0, -1.0):
            p = x.copy()
            p[i] = min(max(x[i] + sign * step[i], bounds.lower[i]), bounds.upper[i])
            if p[i] == x[i]:
                continue
            value = objective(p)
            points.append(p)
            values.append(value)
            side[sign] = (p[i], value)
        hi = side.get(1.0, (x[i], fx))
        lo = side.get(-1.0, (x[i], fx))
        if hi[0] != lo[0] and math.isfinite(hi[1]) and math.isfinite(lo[1]):
            gradient[i] = (hi[1] - lo[1]) / (hi[0] - lo[0])
    return points, values, gradient


def minimize(f: Objective, bounds: BoxBounds, cfg: OptimizerConfig, start: Sequence[float]) -> OptimizationResult:
    """
    Minimize `f` over a box by implicit filtering.

    Args:
        f: Objective, possibly stochastic; called serially
        bounds: Feasible box
        cfg: Budget, stencil scales and line-search settings
        start: Initial point, must lie inside `bounds`

    Returns:
        OptimizationResult with the best evaluated point and the full trace
    """
    x = np.array(start, dtype=float).reshape(-1)
    if not bounds.contains(x):
        raise OptimizationError(f"start point {x} lies outside the bounds", point=x)

    objective = _TrackedObjective(f, bounds, int(cfg.budget))
    converged = False
    try:
        fx = objective(x)
        for h in cfg.scales:
            step = h * bounds.width
            while True:
                points, values, gradient = _stencil(objective, bounds, x, fx, step)
                if not points:
                    break
                # first minimum wins, so ties go to the lowest coordinate index
                k = int(np.argmin(values))
                if not values[k] < fx - cfg.stencil_tolerance:
                    break

                candidate, candidate_value = points[k], values[k]
                lam = 1.0
                for _ in range(cfg.max_halvings + 1):
                    trial = bounds.clip(x - lam * gradient)
                    if np.array_equal(trial, x):
                        break
                    trial_value = objective(trial)
                    if trial_value < candidate_value:
                        candidate, candidate_value = trial, trial_value
                        break
                    lam /= 2.0
                x, fx = candidate, candidate_value
            logger.debug(f"Scale {h:g} done after {len(objective.trace)} evaluations, f = {fx:.6g}")
        converged = True
    except _BudgetExhausted:
        logger.debug(f"Budget of {cfg.budget} evaluations exhausted")

    return OptimizationResult(
        best_point=objective.best_point if objective.best_point is not None else np.array(start, dtype=float),
        best_value=objective.best_value,
        trace=objective.trace,
        evaluations_used=len(objective.trace),
        converged=converged,
    )


def multi_start_minimize(f: Objective, bounds: BoxBounds, cfg: OptimizerConfig, n_starts: int,
                         seed=None,
                         objective_factory: Optional[Callable[[int], Objective]] = None) -> OptimizationResult:
    """
    Run `minimize` from `n_starts` seeded uniform starting points and keep the best.

    Args:
        f: Objective shared by every start (ignored when objective_factory is given)
        bounds: Feasible box
        cfg: Per-start configuration; the budget applies to each start
        n_starts: Number of starting points
        seed: Seed for the starting points, defaults to cfg.seed
        objective_factory: Builds a fresh objective per start index, for
            objectives that carry their own per-start random stream

    Returns:
        Best result; `start_index` names the winning start
    """
    if int(n_starts) < 1:
        raise ValidationError("n_starts must be at least 1", field='n_starts')
    rng = make_rng(cfg.seed if seed is None else seed)
    starts = [bounds.random_point(rng) for _ in range(int(n_starts))]

    best: Optional[OptimizationResult] = None
    for index, start in enumerate(starts):
        objective = objective_factory(index) if objective_factory is not None else f
        result = minimize(objective, bounds, cfg, start)
        result.start_index = index
        logger.debug(f"Start {index}: best value {result.best_value:.6g} after {result.evaluations_used} evaluations")
        if best is None or result.best_value < best.best_value:
            best = result
    return best
