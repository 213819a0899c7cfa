"""Exception hierarchy shared by every honeysift package."""


class HoneysiftError(Exception):
    """Base class for all errors raised by honeysift."""


class FormatError(HoneysiftError):
    """Input bytes do not conform to a wire or file format.

    ``field`` names the offending field (``magic``, ``version``, ``truncated`` ...)
    and ``offset`` is the byte offset at which the problem was detected, if known.
    """

    def __init__(self, field: str, message: str | None = None, *, offset: int | None = None) -> None:
        self.field = field
        self.offset = offset
        detail = message or f'invalid {field}'
        if offset is not None:
            detail = f'{detail} (at byte offset {offset})'
        super().__init__(f'{field}: {detail}')


class ConfigurationError(HoneysiftError, ValueError):
    """A parameter or configuration value is out of its allowed range."""


class ArgumentError(HoneysiftError, ValueError):
    """A function was called with an argument it cannot accept."""


class PersistenceError(HoneysiftError):
    """The thin client could not write its signature database."""


class QuarantineError(HoneysiftError):
    """A matched file could not be moved into the quarantine directory."""
