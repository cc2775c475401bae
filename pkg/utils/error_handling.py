# utils/error_handling.py
"""
Error handling utilities for qlslab.
This module provides the exception family shared by every package and the
consistent error reporting used by the command line front end.
"""

import logging
import sys
from functools import wraps
from typing import Any, Dict, Tuple

logger = logging.getLogger('qlslab.errors')


class LabError(Exception):
    """Base class for every error raised deliberately by qlslab"""
    def __init__(self, message: str):
        self.message = message
        super().__init__(self.message)


class ValidationError(LabError):
    """Custom exception for input validation errors"""
    def __init__(self, message, field=None):
        self.field = field
        super().__init__(message)


class DataSourceError(LabError):
    """Custom exception for instance source errors (generation, loading)"""
    def __init__(self, message, source=None, details=None):
        self.source = source
        self.details = details
        super().__init__(message)


class ProblemSizeError(LabError):
    """Raised when an exhaustive or statevector routine would exceed its size guard"""
    def __init__(self, message, n=None, limit=None):
        self.n = n
        self.limit = limit
        super().__init__(message)


class SimulationError(LabError):
    """Raised for dimension mismatches and invalid simulator inputs"""
    def __init__(self, message, n_qubits=None):
        self.n_qubits = n_qubits
        super().__init__(message)


class RoutingError(LabError):
    """Raised when a circuit cannot be placed on a coupling map"""
    def __init__(self, message, edge=None):
        self.edge = edge
        super().__init__(message)


class OptimizationError(LabError):
    """Raised for invalid optimizer inputs such as an out-of-bounds start"""
    def __init__(self, message, point=None):
        self.point = point
        super().__init__(message)


class FitError(LabError):
    """Raised when curve-fit data is degenerate"""
    def __init__(self, message, model=None):
        self.model = model
        super().__init__(message)


def cli_error_handler(f):
    """Decorator to turn errors in CLI subcommands into exit codes"""
    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except LabError as e:
            logger.error(f"{type(e).__name__}: {e.message}")
            print(f"error: {e.message}", file=sys.stderr)
            return 2
        except OSError as e:
            logger.error(f"I/O error: {str(e)}")
            print(f"error: {str(e)}", file=sys.stderr)
            return 1
        except Exception as e:
            logger.error(f"Unexpected error: {str(e)}", exc_info=True)
            print("error: an unexpected error occurred, see the log for details", file=sys.stderr)
            return 1
    return decorated_function


def validate_experiment_params(params: Dict[str, Any]) -> Tuple[bool, str]:
    """
    Validate experiment sweep parameters before any run is scheduled
    Returns (is_valid, error_message)
    """
    for key in ('p_values', 'modes'):
        if not params.get(key):
            return False, f"Sweep '{key}' must not be empty"

    if any(int(p) < 1 for p in params['p_values']):
        return False, "QAOA depth p must be at least 1"

    known_modes = {'exact', 'shots', 'noisy'}
    unknown = [m for m in params['modes'] if m not in known_modes]
    if unknown:
        return False, f"Unknown mode(s): {', '.join(unknown)}"

    shots = params.get('shots') or []
    if any(int(s) < 1 for s in shots):
        return False, "Shot counts must be positive"

    for key in ('repetitions', 'budget', 'starts'):
        value = params.get(key)
        if value is not None and int(value) < 1:
            return False, f"'{key}' must be at least 1"

    scales = params.get('noise_scales') or []
    if any(float(s) < 0 for s in scales):
        return False, "Noise scales must be non-negative"

    if params.get('jobs') is not None and int(params['jobs']) < 1:
        return False, "'jobs' must be at least 1"

    return True, ""

