"""Exception hierarchy.

Two families: :class:`ContractViolation` for bad inputs (precondition
failures) and :class:`NumericalDiagnostic` for computations that ran but
could not certify their result.
"""


class ContractViolation(ValueError):
    """An operation was called outside its documented preconditions."""


class NumericalDiagnostic(RuntimeError):
    """A numerical procedure failed a self-check."""


class NearEigenvalueError(NumericalDiagnostic):
    def __init__(self, lam, det):
        self.lam = complex(lam)
        self.det = float(det)
        super().__init__(f"lambda={self.lam!r} is too close to an eigenvalue (|det M|={self.det:.3e})")


class IndeterminateCellError(NumericalDiagnostic):
    def __init__(self, cell, reason):
        self.cell = cell
        super().__init__(f"winding number indeterminate on cell {cell}: {reason}")


class BranchNotFoundError(NumericalDiagnostic):
    def __init__(self, k, kind):
        self.k = k
        super().__init__(f"no root found for branch k={k} of {kind}")


class ConvergenceError(NumericalDiagnostic):
    def __init__(self, message, last=None):
        self.last = last
        super().__init__(message)


class EnergyDriftError(NumericalDiagnostic):
    def __init__(self, drift, tol):
        self.drift = drift
        super().__init__(f"energy balance drift {drift:.3e} exceeds tolerance {tol:.1e}")


class MassDriftError(NumericalDiagnostic):
    pass


class TruncationError(NumericalDiagnostic):
    """Heat profile reached the far end of the truncated half-line."""


class DomainConditionError(ContractViolation):
    def __init__(self, violations):
        self.violations = dict(violations)
        desc = ", ".join(f"{k} (residual {v:.3e})" for k, v in self.violations.items())
        super().__init__(f"state not in the generator domain: {desc}")


class InconclusiveError(NumericalDiagnostic):
    pass


class TooSmallEpsilonError(NumericalDiagnostic):
    def __init__(self, needed_length, cap):
        self.needed_length = needed_length
        super().__init__(
            f"construction needs a heat domain of length {needed_length:.4g}, above the cap {cap:.4g}; "
            "increase epsilon"
        )
