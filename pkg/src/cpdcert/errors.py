"""Exception types and the combinatorial cap shared by every module."""

from __future__ import annotations

import contextlib
import contextvars
import os
from math import comb

DEFAULT_CAP = 10_000_000
CAP_ENV_VAR = "CPDCERT_CAP"


class CpdCertError(Exception):
    """Base class for library errors."""


class DomainError(CpdCertError, ValueError):
    """An argument lies outside the domain of an operation."""


class ResourceError(CpdCertError, RuntimeError):
    """A combinatorial quantity exceeds the configured cap."""


class InternalError(CpdCertError, AssertionError):
    """Two implications that must agree disagreed. Indicates a bug."""


def _default_cap() -> int:
    raw = os.environ.get(CAP_ENV_VAR)
    if raw is None:
        return DEFAULT_CAP
    try:
        value = int(raw)
    except ValueError as exc:
        raise DomainError(f"{CAP_ENV_VAR}={raw!r} is not an integer") from exc
    if value < 1:
        raise DomainError(f"{CAP_ENV_VAR} must be positive, got {value}")
    return value


_cap: contextvars.ContextVar[int | None] = contextvars.ContextVar("cpdcert_cap", default=None)


def get_cap() -> int:
    value = _cap.get()
    return _default_cap() if value is None else value


@contextlib.contextmanager
def combinatorial_cap(value: int):
    """Temporarily override the cap for the current thread/context."""
    if value < 1:
        raise DomainError(f"cap must be positive, got {value}")
    token = _cap.set(value)
    try:
        yield value
    finally:
        _cap.reset(token)


def checked_comb(n: int, k: int, what: str = "") -> int:
    """C(n, k), refusing values above the cap."""
    value = comb(n, k)
    cap = get_cap()
    if value > cap:
        label = f" ({what})" if what else ""
        raise ResourceError(f"C({n},{k}) = {value} exceeds the combinatorial cap {cap}{label}")
    return value


def check_size(value: int, what: str) -> int:
    cap = get_cap()
    if value > cap:
        raise ResourceError(f"{what} = {value} exceeds the combinatorial cap {cap}")
    return value
