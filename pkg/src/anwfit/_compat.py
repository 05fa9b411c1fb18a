"""Compatibility shims for older Python versions."""

import enum
import sys

if sys.version_info >= (3, 11):
    StrEnum = enum.StrEnum
else:

    class StrEnum(str, enum.Enum):
        """Backport of :class:`enum.StrEnum` (Python 3.11+)."""

        __str__ = str.__str__
        __format__ = str.__format__
