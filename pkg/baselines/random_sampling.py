# baselines/random_sampling.py
"""Uniform random guessing: the baseline every solver must beat."""

from utils.error_handling import ValidationError


def random_sampling_success(n: int, ground_count: int, queries: int) -> float:
    """Probability that `queries` uniform guesses over 2^n bitstrings hit one of `ground_count` ground states"""
    if ground_count < 1 or ground_count > 2 ** n:
        raise ValidationError(f"ground_count must lie in 1..2^{n}", field='ground_count')
    if queries < 0:
        raise ValidationError("queries must be non-negative", field='queries')
    return 1.0 - (1.0 - ground_count / 2 ** n) ** queries
