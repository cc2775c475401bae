# analysis/curve_fit.py
"""
Scaling-curve fits.

Two models are supported:
    power_law            y = a * n^b
    cumulative_success   y = 1 - (1 - a / 2^(b n))^k

Both are fitted by damped Gauss-Newton on analytic Jacobians. The power
law minimizes relative residuals and starts from a log-log line; the
success model minimizes absolute residuals and starts from a coarse grid.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from utils.error_handling import FitError, ValidationError

logger = logging.getLogger('qlslab.analysis')

MODELS = ('power_law', 'cumulative_success')
LN2 = math.log(2.0)


@dataclass(frozen=True)
class CurveFit:
    model: str
    coefficients: Dict[str, float]
    fit_error: float
    converged: bool = True
    k: Optional[int] = None
    fixed: Tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValidationError(f"model must be one of {MODELS}", field='model')
        if not self.fit_error >= 0.0:
            raise ValidationError("fit_error must be non-negative", field='fit_error')

    @property
    def a(self) -> float:
        return self.coefficients['a']

    @property
    def b(self) -> float:
        return self.coefficients['b']

    def per_query(self, n) -> np.ndarray:
        """Per-query success a / 2^(b n), clipped to [0, 1] (success model only)"""
        n = np.asarray(n, dtype=float)
        return np.clip(self.a * np.exp(-self.b * n * LN2), 0.0, 1.0)

    def predict(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        if self.model == 'power_law':
            return self.a * n ** self.b
        values = 1.0 - (1.0 - self.per_query(n)) ** self.k
        # problems below three variables are always solved
        return np.where(n < 3, 1.0, values)

    def with_k(self, k: int) -> 'CurveFit':
        """Same per-query fit extrapolated to k queries"""
        if self.model != 'cumulative_success':
            raise ValidationError("only the success model depends on k", field='k')
        return replace(self, k=int(k))

    def table_row(self) -> dict:
        row = {'model': self.model, 'a': round(self.a, 4), 'b': round(self.b, 4),
               'fit_error': round(self.fit_error, 4)}
        if self.k is not None:
            row['k'] = self.k
        return row

    def to_json_dict(self) -> dict:
        return {'model': self.model, 'coefficients': dict(self.coefficients), 'fit_error': self.fit_error,
                'converged': self.converged, 'k': self.k, 'fixed': list(self.fixed),
                'table_row': self.table_row()}


def _damped_gauss_newton(residual: Callable[[np.ndarray], np.ndarray],
                         jacobian: Callable[[np.ndarray], np.ndarray],
                         theta0: np.ndarray, max_iter: int = 200, tol: float = 1e-14) -> Tuple[np.ndarray, bool]:
    theta = np.array(theta0, dtype=float)
    r = residual(theta)
    cost = float(r @ r)
    damping = 1e-3
    for _ in range(max_iter):
        jac = jacobian(theta)
        grad = jac.T @ r
        if np.linalg.norm(grad, np.inf) <= tol or cost <= 1e-30:
            return theta, True
        normal = jac.T @ jac
        scale = np.maximum(np.diag(normal), 1e-12)
        improved = False
        while damping <= 1e12:
            try:
                delta = np.linalg.solve(normal + damping * np.diag(scale), -grad)
            except np.linalg.LinAlgError:
                damping *= 10.0
                continue
            trial = theta + delta
            r_trial = residual(trial)
            cost_trial = float(r_trial @ r_trial)
            if np.isfinite(cost_trial) and cost_trial < cost:
                small_step = np.linalg.norm(delta) <= 1e-12 * (1.0 + np.linalg.norm(theta))
                small_gain = cost - cost_trial <= tol * max(cost, 1e-300)
                theta, r, cost = trial, r_trial, cost_trial
                damping = max(damping / 10.0, 1e-12)
                improved = True
                if small_step or small_gain:
                    return theta, True
                break
            damping *= 10.0
        if not improved:
            # no descent possible at any damping: a stationary point within precision
            return theta, bool(np.linalg.norm(grad, np.inf) <= 1e-6 * max(1.0, cost))
    return theta, False


def _mean_relative_error(model_values: np.ndarray, data: np.ndarray) -> float:
    mask = data != 0
    if not np.any(mask):
        return float(np.mean(np.abs(model_values)))
    return float(np.mean(np.abs(model_values[mask] - data[mask]) / np.abs(data[mask])))


def _as_points(points) -> Tuple[np.ndarray, np.ndarray]:
    arr = np.asarray([(float(n), float(v)) for n, v in points], dtype=float).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def fit_power_law(points: Sequence[Tuple[float, float]], fixed_b: Optional[float] = None) -> CurveFit:
    """
    Fit value = a * n^b.

    Args:
        points: (n, value) pairs with positive n and value
        fixed_b: Hold b at this value and fit a alone

    Returns:
        CurveFit whose fit_error is the mean relative error over the points
    """
    ns, ys = _as_points(points)
    if ns.size < 2:
        raise ValidationError("a power-law fit needs at least two points", field='points')
    if np.any(ns <= 0) or np.any(ys <= 0):
        raise ValidationError("power-law data must be positive", field='points')
    log_n, log_y = np.log(ns), np.log(ys)

    if fixed_b is None:
        b0, log_a0 = np.polyfit(log_n, log_y, 1)
        theta0 = np.array([math.exp(log_a0), b0])

        def residual(theta):
            return theta[0] * ns ** theta[1] / ys - 1.0

        def jacobian(theta):
            base = ns ** theta[1] / ys
            return np.column_stack([base, theta[0] * base * log_n])
    else:
        theta0 = np.array([math.exp(float(np.mean(log_y - fixed_b * log_n)))])

        def residual(theta):
            return theta[0] * ns ** fixed_b / ys - 1.0

        def jacobian(theta):
            return (ns ** fixed_b / ys)[:, None]

    theta, converged = _damped_gauss_newton(residual, jacobian, theta0)
    a = float(theta[0])
    b = float(theta[1]) if fixed_b is None else float(fixed_b)
    if not converged:
        logger.warning(f"Power-law fit did not converge (a={a:.4g}, b={b:.4g})")
    fit = CurveFit('power_law', {'a': a, 'b': b}, 0.0, converged,
                   fixed=() if fixed_b is None else ('b',))
    return replace(fit, fit_error=_mean_relative_error(fit.predict(ns), ys))


def fit_success_model(points: Sequence[Tuple[float, float]], k: int, fix_a_to_one: bool = False) -> CurveFit:
    """
    Fit success = 1 - (1 - a / 2^(b n))^k.

    Args:
        points: (n, success) pairs with success in [0, 1]
        k: Queries per run the success values were measured with
        fix_a_to_one: Hold a = 1 so that the per-query success tends to 1 as n -> 0

    Returns:
        CurveFit carrying k; use `with_k` to extrapolate to other query counts
    """
    ns, ys = _as_points(points)
    if ns.size < 1 or (ns.size < 2 and not fix_a_to_one):
        raise ValidationError("not enough points for the success model", field='points')
    if int(k) < 1:
        raise ValidationError("k must be at least 1", field='k')
    if np.any((ys < 0) | (ys > 1)):
        raise ValidationError("success values must lie in [0, 1]", field='points')
    if np.all(ys == 0):
        raise FitError("all success values are zero; the success model is degenerate",
                       model='cumulative_success')
    k = int(k)

    def curve(a, b):
        q = np.clip(a * np.exp(-b * ns * LN2), 0.0, 1.0)
        return q, 1.0 - (1.0 - q) ** k

    def d_curve_dq(q):
        return k * (1.0 - q) ** (k - 1)

    if fix_a_to_one:
        grid_b = np.linspace(-0.5, 3.0, 351)
        costs = [np.sum((curve(1.0, b)[1] - ys) ** 2) for b in grid_b]
        theta0 = np.array([grid_b[int(np.argmin(costs))]])

        def residual(theta):
            return curve(1.0, theta[0])[1] - ys

        def jacobian(theta):
            q, _ = curve(1.0, theta[0])
            inside = (q > 0) & (q < 1)
            return (np.where(inside, d_curve_dq(q) * (-ns * LN2 * q), 0.0))[:, None]
    else:
        grid_a = np.geomspace(1e-3, 10.0, 41)
        grid_b = np.linspace(-0.5, 3.0, 141)
        best = min(((np.sum((curve(a, b)[1] - ys) ** 2), a, b) for a in grid_a for b in grid_b))
        theta0 = np.array([best[1], best[2]])

        def residual(theta):
            return curve(theta[0], theta[1])[1] - ys

        def jacobian(theta):
            q, _ = curve(theta[0], theta[1])
            inside = (q > 0) & (q < 1)
            dq = np.where(inside, d_curve_dq(q), 0.0)
            return np.column_stack([dq * np.exp(-theta[1] * ns * LN2), dq * (-ns * LN2 * q)])

    theta, converged = _damped_gauss_newton(residual, jacobian, theta0)
    a = 1.0 if fix_a_to_one else float(theta[0])
    b = float(theta[-1])
    if not converged:
        logger.warning(f"Success-model fit did not converge (a={a:.4g}, b={b:.4g})")
    fit = CurveFit('cumulative_success', {'a': a, 'b': b}, 0.0, converged, k=k,
                   fixed=('a',) if fix_a_to_one else ())
    return replace(fit, fit_error=_mean_relative_error(curve(a, b)[1], ys))


def sum_squared_residuals(fit: CurveFit, points: Sequence[Tuple[float, float]]) -> float:
    """The least-squares objective each fit minimizes, evaluated at `fit`'s coefficients"""
    ns, ys = _as_points(points)
    if fit.model == 'power_law':
        r = fit.a * ns ** fit.b / ys - 1.0
    else:
        q = np.clip(fit.a * np.exp(-fit.b * ns * LN2), 0.0, 1.0)
        r = 1.0 - (1.0 - q) ** fit.k - ys
    return float(r @ r)
