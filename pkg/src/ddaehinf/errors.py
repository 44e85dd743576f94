"""Exception hierarchy shared by all modules."""


class DdaeError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(DdaeError, ValueError):
    pass


class AssumptionViolation(DdaeError):
    """A structural assumption on the system does not hold (e.g. singular U^T A_0 V)."""


class SingularAtFrequency(DdaeError):
    """The characteristic matrix is (numerically) singular at the requested point."""

    def __init__(self, msg, lam=None):
        super().__init__(msg)
        self.lam = lam


class SingularOnTorus(DdaeError):
    """The algebraic part is singular for some torus angle: the asymptotic
    transfer function is unbounded and the strong H-infinity norm is infinite."""

    def __init__(self, msg, theta=None):
        super().__init__(msg)
        self.theta = theta


class NonConvergence(DdaeError):
    pass


class NotStronglyStable(DdaeError):
    def __init__(self, msg, robust_abscissa=None):
        super().__init__(msg)
        self.robust_abscissa = robust_abscissa


class EigSolverFailure(DdaeError):
    pass


class InvalidOrder(DdaeError, ValueError):
    pass


class GuardViolatedAtStart(DdaeError):
    pass


class NoStabilizingControllerFound(DdaeError):
    def __init__(self, msg, controller=None, value=None):
        super().__init__(msg)
        self.controller = controller
        self.value = value
