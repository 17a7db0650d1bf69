"""Exception types shared across the toolkit."""


class ConeDualError(Exception):
    """Base class for toolkit-specific failures."""


class OmegaInfeasible(ConeDualError):
    """The requested right-hand side admits no feasible point."""


class NoStrongDuality(ConeDualError):
    """The continuous solve finished with a residual duality gap above tolerance."""


class VerificationFailed(ConeDualError):
    """A certificate failed its independent numerical verification."""


class EmptyU(ConeDualError):
    """No feasible integer fiber was found inside the enumeration box."""


class BoxTooSmall(ConeDualError):
    """A feasible fiber exists outside the enumeration box."""


class InfeasiblePoint(ConeDualError):
    """A point claimed feasible violates feasibility tolerances."""


class NodeLimitReached(ConeDualError):
    """Branch and bound hit its node limit before proving optimality.

    Carries the best bound and incumbent found so far, when any.
    """

    def __init__(self, message, best_bound=None, incumbent=None):
        super().__init__(message)
        self.best_bound = best_bound
        self.incumbent = incumbent


class SolverFailure(ConeDualError):
    """The continuous solver could not produce a usable iterate."""
