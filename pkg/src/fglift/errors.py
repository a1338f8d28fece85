"""Exception types shared across the package."""
from __future__ import annotations


class FactorGraphError(Exception):
    """Base class for all errors raised by this package."""


class UnknownFactorPresent(FactorGraphError):
    """An operation that needs fully specified potentials met an unknown factor."""


class StateSpaceTooLarge(FactorGraphError):
    """The joint state space exceeds the configured enumeration cap."""


class UnknownNode(FactorGraphError):
    """A referenced node id does not exist in the graph."""


class ParseError(FactorGraphError):
    """A text input could not be parsed.

    Carries the 1-based line number and a short reason.
    """

    def __init__(self, line: int, reason: str) -> None:
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class InconsistentEvidence(FactorGraphError):
    """Evidence assignments conflict or zero out the whole distribution."""


class DomainMismatch(FactorGraphError):
    """Two distributions that should share a domain do not."""


class InfiniteDivergence(FactorGraphError):
    """KL divergence is infinite: p puts mass where q has none."""


class GenerationInfeasible(FactorGraphError):
    """No synthetic instance satisfying all constraints could be built."""
