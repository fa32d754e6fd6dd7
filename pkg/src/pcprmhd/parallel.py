"""Thread-count control for the compiled kernels."""

from __future__ import annotations

import logging
import os

import numba

logger = logging.getLogger(__name__)

ENV_VAR = "RMHD_THREADS"


def configure_threads(n: int | None = None) -> int:
    """Set the kernel thread count from ``n`` or ``RMHD_THREADS``.

    Values are clamped to ``[1, available]``.  Unset or invalid values leave
    numba's default in place.

    Returns:
        The thread count in effect.
    """
    if n is None:
        raw = os.environ.get(ENV_VAR, "").strip()
        if raw:
            try:
                n = int(raw)
            except ValueError:
                logger.warning("ignoring non-integer %s=%r", ENV_VAR, raw)
    if n is not None:
        n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
        if n != threads():
            numba.set_num_threads(n)
    return threads()


def threads() -> int:
    return numba.get_num_threads()
