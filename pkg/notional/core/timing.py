import logging
import time
import uuid
from contextlib import contextmanager

logger = logging.getLogger(__name__)


@contextmanager
def stage_timer(stage: str):
    """Log entry, exit and duration of a pipeline stage"""
    run_id = uuid.uuid4().hex[:8]

    logger.info(f"Run ID: {run_id} | Stage: {stage} | started")

    start_time = time.perf_counter()
    try:
        yield run_id
    finally:
        duration = time.perf_counter() - start_time
        logger.info(
            f"Run ID: {run_id} | "
            f"Stage: {stage} | "
            f"Duration: {duration:.2f}s"
        )
