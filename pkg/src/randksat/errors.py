"""Exception types raised across the package."""


class RandKSATError(Exception):
    pass


class MalformedInput(RandKSATError, ValueError):
    pass


class NonUniformWidth(MalformedInput):
    pass


class DomainError(RandKSATError, ValueError):
    pass


class ResampleBudgetExceeded(RandKSATError):
    def __init__(self, rounds, violating):
        super().__init__(
            f"marking resampling gave up after {rounds} rounds "
            f"({violating} good clauses still violate the distribution bounds)"
        )
        self.rounds = rounds
        self.violating = violating


class EmptyClause(RandKSATError):
    """The simplified formula contains a falsified clause; its count is zero."""


class NotAForest(RandKSATError, AssertionError):
    pass


class ExcessBudgetExceeded(RandKSATError):
    def __init__(self, n_cycle_vars, cap):
        super().__init__(f"component needs {n_cycle_vars} cycle-breaking variables (cap {cap})")
        self.n_cycle_vars = n_cycle_vars
        self.cap = cap


class ComponentTooLarge(RandKSATError):
    def __init__(self, size, cap, var=None):
        super().__init__(f"component of size {size} exceeds cap {cap}")
        self.size = size
        self.cap = cap
        self.var = var


class UnsatisfiableResidual(RandKSATError):
    def __init__(self, var=None):
        super().__init__(f"residual formula has no satisfying assignment (while sampling x{var})")
        self.var = var


class MarkingInvalid(RandKSATError, ValueError):
    pass


class UndefinedConditional(RandKSATError, ValueError):
    pass


class TooLarge(RandKSATError, ValueError):
    pass


class SupportMismatch(RandKSATError, ValueError):
    pass
