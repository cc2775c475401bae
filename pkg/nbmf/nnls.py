# nbmf/nnls.py
"""Nonnegative least squares by projected gradient descent."""

import numpy as np

from utils.error_handling import ValidationError

POWER_ITERATIONS = 300


def _largest_eigenvalue(gram: np.ndarray) -> float:
    """Power iteration on a symmetric PSD matrix"""
    size = gram.shape[0]
    v = np.ones(size) + np.arange(size) / (10.0 * size)
    v /= np.linalg.norm(v)
    estimate = 0.0
    for _ in range(POWER_ITERATIONS):
        w = gram @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        previous, estimate = estimate, float(v @ gram @ v)
        if abs(estimate - previous) <= 1e-14 * max(estimate, 1.0):
            break
    return estimate


def nnls_rows(targets, basis, initial=None, max_iter: int = 500, tol: float = 1e-8) -> np.ndarray:
    """
    Solve min_w ||basis @ w_i - targets_i||^2 subject to w_i >= 0 for every
    row i of `targets` at once.

    Args:
        targets: rows x k matrix
        basis: k x r matrix shared by all rows
        initial: Warm start (rows x r, clipped to the feasible set), zeros by default
        max_iter: Iteration cap
        tol: Stop when every row's projected gradient norm falls below this

    Returns:
        Nonnegative rows x r matrix. Each row's objective is no worse than at
        zero, and after the descent its free coordinates are re-solved
        exactly when that keeps them nonnegative.
    """
    targets = np.asarray(targets, dtype=float)
    basis = np.asarray(basis, dtype=float)
    if basis.ndim != 2 or targets.ndim != 2 or targets.shape[1] != basis.shape[0]:
        raise ValidationError(f"basis {basis.shape} and targets {targets.shape} do not agree", field='basis')
    if not (np.all(np.isfinite(basis)) and np.all(np.isfinite(targets))):
        raise ValidationError("nnls inputs must be finite", field='basis')

    rows, r = targets.shape[0], basis.shape[1]
    gram = basis.T @ basis
    rhs = targets @ basis
    if initial is None:
        w = np.zeros((rows, r))
    else:
        w = np.maximum(np.asarray(initial, dtype=float).reshape(rows, r), 0.0)

    lipschitz = _largest_eigenvalue(gram) * (1.0 + 1e-9)
    if lipschitz > 0.0:
        for _ in range(max_iter):
            grad = w @ gram - rhs
            projected = np.where(w > 0, grad, np.minimum(grad, 0.0))
            if np.max(np.linalg.norm(projected, axis=1), initial=0.0) < tol:
                break
            w = np.maximum(w - grad / lipschitz, 0.0)

    for i in range(rows):
        w[i] = _polish(w[i], basis, targets[i])
    return w


def nnls_row(target, basis, initial=None, max_iter: int = 500, tol: float = 1e-8) -> np.ndarray:
    """Single-row nnls_rows: min_w ||basis @ w - target||^2 subject to w >= 0."""
    target = np.asarray(target, dtype=float)
    basis = np.asarray(basis, dtype=float)
    if basis.ndim != 2 or target.shape != (basis.shape[0],):
        raise ValidationError(f"basis {basis.shape} and target {target.shape} do not agree", field='basis')
    start = None if initial is None else np.asarray(initial, dtype=float)[None, :]
    return nnls_rows(target[None, :], basis, initial=start, max_iter=max_iter, tol=tol)[0]


def _polish(w: np.ndarray, basis: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Exact least squares over the support of w, then the zero fallback"""
    free = w > 0
    if np.any(free):
        refined = np.zeros_like(w)
        refined[free] = np.linalg.lstsq(basis[:, free], target, rcond=None)[0]
        if np.all(refined >= 0) and _objective(refined, basis, target) <= _objective(w, basis, target):
            w = refined
    if _objective(w, basis, target) > target @ target:
        return np.zeros_like(w)
    return w


def _objective(w: np.ndarray, basis: np.ndarray, target: np.ndarray) -> float:
    residual = basis @ w - target
    return float(residual @ residual)
