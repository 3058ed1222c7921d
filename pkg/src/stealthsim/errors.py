"""Exception hierarchy shared by every stealthsim module."""


class StealthError(Exception):
    """Base class for all library errors."""


class TaxonomyError(StealthError, ValueError):
    pass


class UnknownSkill(StealthError, KeyError):
    def __str__(self):
        return f"unknown skill: {self.args[0]!r}" if self.args else "unknown skill"


class EmptyInterestSet(StealthError, ValueError):
    pass


class NoReceiver(StealthError):
    """Raised when a node must pick a receiver from an empty health community."""


class TraceError(StealthError, ValueError):
    pass


class ParseError(TraceError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class NonMonotonicTime(TraceError):
    pass


class OutOfBounds(TraceError):
    pass


class TimeOutOfRange(TraceError):
    pass


class InvalidParams(StealthError, ValueError):
    pass


class ConfigError(StealthError, ValueError):
    pass


class UnknownScenario(ConfigError):
    pass


class InvalidOverride(ConfigError):
    pass


class ConflictingFixedProfile(StealthError, ValueError):
    pass


class EmptyLogs(StealthError, ValueError):
    pass


class NoEmergencies(StealthError, ValueError):
    pass


class NoSuccesses(StealthError, ValueError):
    pass
