"""
Stage logger for the certification pipeline.
"""

import logging
import time

from core.exceptions import AppException

logger = logging.getLogger(__name__)


class StageLogger:
    """
    Context manager that logs a pipeline stage and tags failures with it.

    Any AppException leaving the block gets ``details["stage"]`` so the
    report names where the pipeline stopped.
    """

    def __init__(self, stage: str):
        self.stage = stage
        self.elapsed = 0.0
        self._start = 0.0

    def __enter__(self):
        logger.info("Stage: %s", self.stage)
        self._start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.elapsed = time.perf_counter() - self._start
        if exc is None:
            logger.info("Stage %s done in %.3fs", self.stage, self.elapsed)
            return False
        if isinstance(exc, AppException):
            exc.details.setdefault("stage", self.stage)
            logger.error("Stage %s failed: %s", self.stage, exc.message)
        else:
            logger.error("Stage %s raised %s", self.stage, exc_type.__name__)
        return False
