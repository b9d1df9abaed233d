from __future__ import annotations

import logging
from typing import Callable, TypeVar

from tenacity import (
    RetryCallState,
    Retrying,
    retry_if_exception_type,
    stop_after_attempt,
)

from app.errors import ConvergenceError

T = TypeVar("T")

logger = logging.getLogger(__name__)


def format_retry_log(retry_state: RetryCallState) -> str:
    exc = retry_state.outcome.exception() if retry_state.outcome else None
    return f"attempt={retry_state.attempt_number} exc={exc!r}"


def _log_retry(retry_state: RetryCallState) -> None:
    logger.info("convergence retry %s", format_retry_log(retry_state))


def with_growing_budget(fn: Callable[[int], T], *, budget: int, attempts: int = 3) -> T:
    """Call ``fn(budget)``; on ConvergenceError retry with the budget doubled."""
    retrying = Retrying(
        retry=retry_if_exception_type(ConvergenceError),
        stop=stop_after_attempt(max(1, attempts)),
        before_sleep=_log_retry,
        reraise=True,
    )
    for attempt in retrying:
        with attempt:
            scaled = budget * 2 ** (attempt.retry_state.attempt_number - 1)
            return fn(scaled)
    raise ConvergenceError("retry loop exited without result")
