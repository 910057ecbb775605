"""Exception hierarchy shared by all nltim modules."""


class NLTError(Exception):
    """Base class for every error raised by nltim."""


class NetworkError(NLTError, ValueError):
    """Malformed network input."""


class DuplicateEdge(NetworkError):
    pass


class WeightOutOfRange(NetworkError):
    pass


class WeightSumExceedsOne(NetworkError):
    pass


class UnknownEndpoint(NetworkError):
    pass


class ReservedLabel(NetworkError):
    pass


class CyclicNetwork(NLTError):
    """Raised when an acyclic-only routine receives a network with a directed cycle."""

    def __init__(self, cycle, message=None):
        self.cycle = list(cycle)
        if message is None:
            message = "network has a directed cycle: " + " -> ".join(map(str, self.cycle + self.cycle[:1]))
        super().__init__(message)


class VoidInPermanentSet(NLTError, ValueError):
    pass


class VoidTarget(NLTError, ValueError):
    pass


class InvalidSeeds(NLTError, ValueError):
    pass


class MissingThreshold(NLTError, ValueError):
    pass


class CandidateAlreadySeeded(NLTError, ValueError):
    pass


class CellBudgetExceeded(NLTError):
    pass


class SearchBudgetExceeded(NLTError):
    pass


class NotFound(NLTError):
    """Counterexample search exhausted without a witness (not a disproof)."""
