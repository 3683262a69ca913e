import logging
import os

logger = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


def worker_count(default: int | None = None) -> int:
    """Thread cap from PATCHBEAM_THREADS, else the CPU count."""
    raw = os.environ.get("PATCHBEAM_THREADS")
    if raw:
        try:
            value = int(raw)
            if value >= 1:
                return value
        except ValueError:
            pass
        logger.warning(f"Ignoring invalid PATCHBEAM_THREADS={raw!r}")
    return default or max(1, min(8, os.cpu_count() or 1))
