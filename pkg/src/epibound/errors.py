"""Semantic exception hierarchy.

Public functions raise these instead of bare ValueError/RuntimeError so
callers can distinguish contract violations from numerical trouble.
"""


class EpiboundError(Exception):
    """Base error for this package."""


class InvalidTaskDistribution(EpiboundError, ValueError):
    """Task distribution violates its invariants (empty, bad weights, mixed spaces)."""


class EventMismatch(EpiboundError, ValueError):
    """An event or distribution pair does not live on the expected sample space."""


class SupportViolation(EpiboundError):
    """A density/mass was required to be positive where it is zero."""


class PreconditionViolated(EpiboundError):
    """A bound statement's hypothesis fails on the given instance.

    ``assumption`` names the failed hypothesis (e.g. ``"perfect_learning"``,
    ``"first_order_boundedness"``, ``"eps_neighborhood"``).
    """

    def __init__(self, assumption: str, detail: str = ""):
        self.assumption = assumption
        msg = assumption if not detail else f"{assumption}: {detail}"
        super().__init__(msg)


class InvalidModelClass(EpiboundError, ValueError):
    """Model class is empty or its members live on different sample spaces."""


class NumericalFailure(EpiboundError, FloatingPointError):
    """A numerical routine failed (singular matrix, non-PD covariance, ...)."""


class InvalidArgument(EpiboundError, ValueError):
    """An argument is outside its documented domain."""


class GenerationFailure(EpiboundError):
    """Random instance generation could not satisfy the requested constraints."""
