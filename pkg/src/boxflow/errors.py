"""Exception types shared across the package."""


class BoxflowError(Exception):
    """Base class for all package-specific errors."""


class UsageError(BoxflowError, ValueError):
    """A caller violated a documented precondition."""


class GridMismatchError(UsageError):
    """Two covers on different grids were combined or compared."""


class OutOfDomainError(BoxflowError):
    """A point lies outside the grid domain."""

    def __init__(self, point):
        self.point = point
        super().__init__(f"point {point} lies outside the grid domain")


class EmptyTargetError(UsageError):
    """Distance to an empty cover is undefined."""


class DomainEscapeError(BoxflowError):
    """A trajectory left the escape box during integration.

    Carries the exit time and state; when raised from a cover image,
    also the cell and sample point the trajectory started from.
    """

    def __init__(self, time, state, lam=None, cell=None, sample=None):
        self.time = time
        self.state = state
        self.lam = lam
        self.cell = cell
        self.sample = sample
        msg = f"trajectory left the escape box at t={time:.6g}, state={state}"
        if lam is not None:
            msg += f", lambda={lam}"
        if cell is not None:
            msg += f", started in cell {cell} at {sample}"
        super().__init__(msg)


class NonConvergenceError(BoxflowError):
    """Fixed-cover iteration did not settle within max_iter."""

    def __init__(self, trace, message="cover iteration did not converge"):
        self.trace = trace
        super().__init__(f"{message} ({len(trace.entries)} iterations)")


class NotAbsorbedError(BoxflowError):
    """The source cover never entered the target within the step budget."""

    def __init__(self, max_steps, lam=None):
        self.max_steps = max_steps
        self.lam = lam
        msg = f"source not absorbed into target within {max_steps} steps"
        if lam is not None:
            msg += f" (lambda={lam})"
        super().__init__(msg)


class UnabsorbedError(BoxflowError):
    """The common-time absorption precondition failed at some parameter."""

    def __init__(self, lam):
        self.lam = lam
        super().__init__(f"absorption precondition fails at lambda={lam}")


class AllFailedError(BoxflowError):
    """Every grid point of a parameter sweep failed."""


class InternalError(BoxflowError):
    """An invariant the code relies on was violated (likely a bug)."""
