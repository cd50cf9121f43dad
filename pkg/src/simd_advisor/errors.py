"""Exception hierarchy shared by the ingest and analysis modules."""

from __future__ import annotations


class AdvisorError(Exception):
    """Base class for every error raised by simd_advisor."""


class InputError(AdvisorError):
    """An input file or stream could not be parsed."""


class MalformedDocument(InputError):
    def __init__(self, index: int, reason: str, source: str = "<stream>") -> None:
        self.index = index
        self.reason = reason
        self.source = source
        super().__init__(f"{source}: document {index}: {reason}")


class BadHeader(InputError):
    def __init__(self, expected: str, got: str, source: str = "<stream>") -> None:
        self.expected = expected
        self.got = got
        self.source = source
        super().__init__(f"{source}: bad header {got!r}, expected {expected!r}")


class BadRow(InputError):
    def __init__(self, line: int, reason: str, source: str = "<stream>") -> None:
        self.line = line
        self.reason = reason
        self.source = source
        super().__init__(f"{source}:{line}: {reason}")


class NegativeValue(BadRow):
    def __init__(self, line: int, value: str, source: str = "<stream>") -> None:
        super().__init__(line, f"negative counter value {value!r}", source)


class NoSamples(InputError):
    def __init__(self, source: str = "<stream>") -> None:
        self.source = source
        super().__init__(f"{source}: no profile samples found")


class ConfigError(InputError):
    """A rule file or config file is invalid."""


class InvalidCategory(AdvisorError, ValueError):
    pass


class BadElementWidth(AdvisorError, ValueError):
    pass


class NoSharedCounters(AdvisorError, ValueError):
    pass


class MissingTimePercent(AdvisorError, ValueError):
    def __init__(self, label: str) -> None:
        self.label = label
        super().__init__(f"counter set {label!r} has no TIME_PERCENT")


class NoSharedMetric(AdvisorError, ValueError):
    pass
