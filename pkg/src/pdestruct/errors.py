"""Exception hierarchy shared by every analysis module."""


class PdeStructError(Exception):
    """Base class for all errors raised by pdestruct."""


class ValidationError(PdeStructError, ValueError):
    """Malformed input: bad grid geometry, bad profile table, bad config."""


class DomainError(PdeStructError, ValueError):
    """A point or stencil falls outside the domain of a function."""


class CatalogError(PdeStructError, KeyError):
    """Unknown catalog identifier."""

    def __init__(self, name, available):
        self.name = name
        self.available = tuple(available)
        super().__init__(f"unknown catalog entry {name!r}; available: {', '.join(self.available)}")

    def __str__(self):
        return self.args[0]


class DegenerateInputError(PdeStructError, ValueError):
    """Coincident points where a quotient needs distinct ones."""


class NumericalError(PdeStructError, ArithmeticError):
    """A non-finite intermediate value was produced."""

    def __init__(self, message, point=None):
        self.point = point
        super().__init__(message if point is None else f"{message} at {point}")


class HypothesisViolation(PdeStructError):
    """The input does not satisfy the hypothesis an operation relies on.

    ``condition`` names the failed gate, ``node`` is the worst probe point and
    ``value`` the offending defect there.
    """

    def __init__(self, condition, node=None, value=None, gate=None):
        self.condition = condition
        self.node = node
        self.value = value
        self.gate = gate
        msg = f"hypothesis violated: {condition}"
        if node is not None:
            msg += f" (worst node {tuple(float(c) for c in node)}"
            if value is not None:
                msg += f", defect {value:.6g}"
            if gate is not None:
                msg += f" > gate {gate:.3g}"
            msg += ")"
        super().__init__(msg)


class UnsupportedOrderError(PdeStructError, ValueError):
    """Decomposition order above the configured recursion cap."""


class UnsupportedDimensionError(PdeStructError, ValueError):
    """Tabulation requested in a dimension that is too large."""


class NonDifferentiableError(PdeStructError):
    """A Richardson refinement diverged, so the derivative is reported as non-existent."""

    def __init__(self, message, values=None):
        self.values = values
        super().__init__(message)
