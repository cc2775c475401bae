# nbmf/als.py
"""
Non-negative binary matrix factorization V ~ W H by alternating least squares.

W (m x r) is real and nonnegative, H (r x n) is binary. Each outer iteration
refits every row of W by nonnegative least squares against the current H,
then every column of H as a binary least-squares problem with A = W and
b = the matching column of V.

When the alternation stalls above an exact fit, single bit flips of H with
W refitted after each flip move it off the fixed point, and the run goes on
alternating from there. Ten random starts are tried by default; the first
exact fit ends the search.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from nbmf.nnls import nnls_rows
from nbmf.solvers import BllsBackend
from problems.blls import BllsInstance
from utils.error_handling import ValidationError
from utils.seeding import derive_seed, make_rng

logger = logging.getLogger('qlslab.nbmf')

EXACT_TOL = 1e-12
# relative drop a bit flip must achieve to be taken
FLIP_GAIN = 1e-9


@dataclass(frozen=True, eq=False)
class NbmfProblem:
    v_matrix: np.ndarray
    rank: int
    max_outer_iters: int = 50
    tolerance: float = 1e-5
    seed: int = 0
    restarts: int = 10
    flip_search: bool = True

    def __post_init__(self):
        v = np.array(self.v_matrix, dtype=float, copy=True)
        if v.ndim != 2 or v.size == 0:
            raise ValidationError("V must be a nonempty matrix", field='v_matrix')
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValidationError("V entries must be finite and nonnegative", field='v_matrix')
        if not 1 <= int(self.rank) <= min(v.shape):
            raise ValidationError(f"rank must lie in 1..{min(v.shape)}", field='rank')
        if self.max_outer_iters < 1 or self.tolerance < 0 or self.restarts < 1:
            raise ValidationError("max_outer_iters and restarts must be positive, tolerance non-negative",
                                  field='max_outer_iters')
        v.setflags(write=False)
        object.__setattr__(self, 'v_matrix', v)
        object.__setattr__(self, 'rank', int(self.rank))


@dataclass
class NbmfResult:
    w: np.ndarray
    h: np.ndarray
    objective_trace: List[float] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.objective_trace)


def frobenius_residual(v: np.ndarray, w: np.ndarray, h: np.ndarray) -> float:
    return float(np.linalg.norm(v - w @ h))


def _refit_w(v: np.ndarray, h: np.ndarray, w: np.ndarray) -> np.ndarray:
    return nnls_rows(v, h.T.astype(float), initial=w)


def _flip_descent(v: np.ndarray, w: np.ndarray, h: np.ndarray, max_moves: int):
    """
    Steepest descent over single bit flips of H, each flip scored after
    refitting W. Moves only while some flip lowers ||V - WH||_F.

    Returns:
        (w, h, objective, moves)
    """
    r, n = h.shape
    objective = frobenius_residual(v, w, h)
    moves = 0
    while moves < max_moves:
        best = None
        for k in range(r):
            for j in range(n):
                trial_h = h.copy()
                trial_h[k, j] ^= 1
                trial_w = _refit_w(v, trial_h, w)
                value = frobenius_residual(v, trial_w, trial_h)
                if value < objective * (1.0 - FLIP_GAIN) and (best is None or value < best[0]):
                    best = (value, trial_w, trial_h)
        if best is None:
            break
        objective, w, h = best
        moves += 1
    return w, h, objective, moves


def _alternate(p: NbmfProblem, backend: BllsBackend, h: np.ndarray, seed: int) -> NbmfResult:
    v = p.v_matrix
    m, n = v.shape
    w = np.zeros((m, p.rank))
    exact = EXACT_TOL * float(np.linalg.norm(v))
    trace: List[float] = []
    converged = False
    for iteration in range(p.max_outer_iters):
        w = _refit_w(v, h, w)

        for j in range(n):
            column = BllsInstance(w, v[:, j], seed=0, instance_id=f"col{j:03d}")
            h[:, j] = backend.solve(column, derive_seed(seed, iteration, j))

        objective = frobenius_residual(v, w, h)
        trace.append(objective)
        logger.debug(f"NBMF iteration {iteration}: ||V - WH||_F = {objective:.6g}")
        if objective <= exact:
            converged = True
            break
        if len(trace) > 1 and abs(trace[-2] - objective) <= p.tolerance * trace[-2]:
            if p.flip_search:
                w, h, improved, moves = _flip_descent(v, w, h, 2 * p.rank * n)
                if moves:
                    logger.debug(f"NBMF iteration {iteration}: {moves} bit flip(s) lowered the residual "
                                 f"to {improved:.6g}")
                    # flips are part of this iteration
                    trace[-1] = improved
                    continue
            converged = True
            break
    return NbmfResult(w=w, h=h, objective_trace=trace, converged=converged)


def nbmf_solve(p: NbmfProblem, backend: BllsBackend, initial_h: Optional[np.ndarray] = None) -> NbmfResult:
    """
    Factorize p.v_matrix with alternating W and H updates.

    Args:
        p: Matrix, rank, stopping rule and number of random restarts
        backend: Solver for the binary H columns
        initial_h: Starting H (r x n binary); uniform random bits from p.seed otherwise.
            A given initial_h disables restarts.

    Returns:
        NbmfResult of the restart with the smallest final ||V - WH||_F
    """
    m, n = p.v_matrix.shape
    r = p.rank
    if initial_h is not None:
        h = np.array(initial_h, dtype=np.int64)
        if h.shape != (r, n) or not np.all((h == 0) | (h == 1)):
            raise ValidationError(f"initial_h must be a binary {r} x {n} matrix", field='initial_h')
        starts = [(h, p.seed)]
    else:
        starts = []
        for restart in range(p.restarts):
            seed = p.seed if restart == 0 else derive_seed(p.seed, 'restart', restart)
            starts.append((make_rng(seed).integers(0, 2, size=(r, n)), seed))

    best: Optional[NbmfResult] = None
    exact = EXACT_TOL * float(np.linalg.norm(p.v_matrix))
    for restart, (h, seed) in enumerate(starts):
        result = _alternate(p, backend, h, seed)
        if best is None or result.objective_trace[-1] < best.objective_trace[-1]:
            best = result
        if best.objective_trace[-1] <= exact:
            break

    logger.info(f"NBMF ({backend.name}) finished after {restart + 1} start(s): "
                f"{best.iterations} iteration(s), residual {best.objective_trace[-1]:.6g}, "
                f"converged={best.converged}")
    return best
