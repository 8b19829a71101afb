"""Exception hierarchy shared by every module."""


class JPCError(Exception):
    """Base class for all errors raised by :mod:`jpc`."""


class CapacityViolation(JPCError, ValueError):
    pass


class InvalidRemoval(JPCError, ValueError):
    pass


class DuplicatePush(JPCError, ValueError):
    pass


class InvalidProfile(JPCError, ValueError):
    pass


class DomainError(JPCError, ValueError):
    """A formula was evaluated outside the regime where it is defined."""


class InstanceTooLarge(JPCError):
    """An exhaustive oracle refused an instance above its hard size limit."""


class StateBudgetExceeded(JPCError):
    """The exact trellis would need more states per slice than allowed."""

    def __init__(self, count: int, budget: int):
        self.count = count
        self.budget = budget
        super().__init__(
            f"trellis slice would hold {count} states, budget is {budget}"
        )
