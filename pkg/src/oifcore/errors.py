"""Status codes, the library exception, and the diagnostics channel.

Everything that crosses the plugin boundary reports success or failure
through a signed 32-bit status: 0 on success, negative on failure.  The
Python-facing layers turn nonzero statuses into :class:`OifError`; the
transport layers (dispatch, bridge) pass raw integers through untouched.
"""

from __future__ import annotations

import sys
import threading
from enum import IntEnum


class Status(IntEnum):
    OK = 0
    INVALID_ARGUMENT = -1
    ALLOC_FAILURE = -2
    MISMATCH = -3
    NOT_FOUND = -4
    PLUGIN_FAILURE = -5
    SOLVER_FAILURE = -6


class OifError(Exception):
    """Failure of a boundary-crossing operation.

    Carries the numeric status of the failing operation in ``status``;
    the plugin-reported (or library-generated) reason is the message.
    """

    def __init__(self, status: int, message: str = ""):
        super().__init__(message or f"operation failed with status {status}")
        self.status = int(status)


_tls = threading.local()


def set_last_error(message: str) -> None:
    _tls.message = message


def get_last_error() -> str:
    """Reason recorded for the most recent failure on this thread."""
    return getattr(_tls, "message", "")


def raise_for_status(status: int, fallback: str = "") -> int:
    """Return ``status`` if zero, else raise :class:`OifError` with the
    thread's recorded reason."""
    if status != 0:
        raise OifError(status, get_last_error() or fallback)
    return status


def diag(message: str) -> None:
    """Non-fatal diagnostic; goes to standard error with the library prefix."""
    print(f"oif: {message}", file=sys.stderr)
