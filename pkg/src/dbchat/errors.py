"""Shared exception hierarchy.

Every module raises subclasses of :class:`DbChatError` so callers can catch
one base type at API boundaries (the HTTP server, the CLI).
"""

from __future__ import annotations


class DbChatError(Exception):
    """Base class for all errors raised by this package."""
