"""Exception types shared across modules."""


class HypothesisError(ValueError):
    """A standing assumption or a theorem hypothesis is violated."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (non-convergence, stiffness, empty search)."""
