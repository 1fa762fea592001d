"""Exception hierarchy shared by all modules."""


class EpicascadeError(Exception):
    """Base class for every error raised by the package."""


class InvalidEdge(EpicascadeError, ValueError):
    pass


class DisconnectedGraph(EpicascadeError, ValueError):
    pass


class GenerationFailed(EpicascadeError, RuntimeError):
    pass


class OutOfRange(EpicascadeError, IndexError):
    pass


class OverrideOutOfRange(EpicascadeError, ValueError):
    pass


class EmptySeedSet(EpicascadeError, ValueError):
    pass


class IsSeed(EpicascadeError, ValueError):
    pass


class NonPositiveWeights(EpicascadeError, ValueError):
    pass


class ParseError(EpicascadeError, ValueError):
    """Scenario or agent file could not be parsed.

    ``where`` carries a line number or field path when one is known.
    """

    def __init__(self, message, where=None):
        self.where = where
        super().__init__(f"{where}: {message}" if where is not None else message)


class ValidationError(EpicascadeError, ValueError):
    """A parsed scenario violates an invariant; the message names it."""


class BadRecord(EpicascadeError, ValueError):
    def __init__(self, message, row):
        self.row = row
        super().__init__(f"row {row}: {message}")
