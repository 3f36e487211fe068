"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateDistributionError(ValueError):
    """A distribution with a single atom was used where a continuous surrogate is needed."""


class InvalidMeasureError(ValueError):
    """Linear-fractional coefficients violate the admissibility conditions."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class OutsideDomainError(ValueError):
    """Utility denominator vanishes for the given classifier statistics."""


class FairnessPreconditionError(ValueError):
    """A competing classifier is not demographic-parity fair."""


class DualSolverError(RuntimeError):
    """The dual solver failed to produce a certified optimum."""

    def __init__(self, message, best_lambda=None, best_objective=None):
        super().__init__(message)
        self.best_lambda = best_lambda
        self.best_objective = best_objective


class ZeroTotalVariationError(ValueError):
    """The two group-conditional feature laws coincide."""


class NoFeasibleClassifierError(RuntimeError):
    """No deterministic classifier satisfies the parity tolerance."""
