"""Execution of independent runs, serially or in a process pool."""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, List, Sequence, Tuple

logger = logging.getLogger(__name__)


def run_parallel(fn: Callable[..., Any], calls: Sequence[Tuple[Any, ...]], jobs: int = 1) -> List[Any]:
    """Apply ``fn`` to each argument tuple, preserving input order.

    Args:
        fn: Picklable top-level function
        calls: One argument tuple per call
        jobs: Worker processes; 1 runs in-process

    Returns:
        Results in the order of ``calls``
    """
    if jobs <= 1 or len(calls) <= 1:
        return [fn(*args) for args in calls]
    workers = min(jobs, len(calls))
    logger.info("Running %d jobs on %d worker processes", len(calls), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *args) for args in calls]
        return [f.result() for f in futures]
