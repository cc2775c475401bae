# utils/parallel.py
"""Process-pool fan-out for independent, seeded tasks."""

import logging
import os
from multiprocessing import Pool, cpu_count
from typing import Callable, List, Optional, Sequence

logger = logging.getLogger('qlslab.parallel')


def default_jobs() -> int:
    """QLSLAB_JOBS if set, else the number of CPUs"""
    value = os.getenv('QLSLAB_JOBS')
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            logger.warning(f"Ignoring non-integer QLSLAB_JOBS={value!r}")
    return cpu_count()


def run_parallel(func: Callable, job_args: Sequence, jobs: Optional[int] = None) -> List:
    """
    Apply `func` to every item of `job_args`, preserving order.

    Every task carries its own seed, so the result list does not depend on
    the number of processes. `func` and its arguments must be picklable.
    """
    job_args = list(job_args)
    jobs = default_jobs() if jobs is None else int(jobs)
    num_processes = min(jobs, len(job_args))
    if num_processes <= 1:
        return [func(args) for args in job_args]

    logger.debug(f"Using {num_processes} processes for {len(job_args)} tasks")
    with Pool(processes=num_processes) as pool:
        return pool.map(func, job_args)
