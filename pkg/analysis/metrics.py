# analysis/metrics.py
"""Run metrics: relative error, cumulative success and median/MAD aggregation."""

import math
from typing import Sequence, Tuple

import numpy as np

from utils.error_handling import ValidationError


def relative_error(expectation: float, ground_energy: float) -> float:
    """|(C - E_gs) / E_gs|; undefined for a zero ground energy."""
    if ground_energy == 0.0:
        raise ValidationError("relative error is undefined for a zero ground energy", field='ground_energy')
    return abs((expectation - ground_energy) / ground_energy)


def cumulative_success(p_eff: float, k: int) -> float:
    """Probability that at least one of k independent queries succeeds: 1 - (1 - p_eff)^k"""
    if not 0.0 <= p_eff <= 1.0 or math.isnan(p_eff):
        raise ValidationError(f"p_eff = {p_eff} is not a probability", field='p_eff')
    if k < 0:
        raise ValidationError("k must be non-negative", field='k')
    # log1p/expm1 keep tiny probabilities exact
    if p_eff == 1.0:
        return 1.0 if k > 0 else 0.0
    return -math.expm1(k * math.log1p(-p_eff))


def aggregate(values: Sequence[float]) -> Tuple[float, float]:
    """(median, median absolute deviation)"""
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        raise ValidationError("cannot aggregate an empty list", field='values')
    median = float(np.median(arr))
    return median, float(np.median(np.abs(arr - median)))
