"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Raised when an instance, policy, or experiment configuration is invalid."""


class ScheduleExhausted(RuntimeError):
    """Raised when a phase sample count is requested past the last feasible phase.

    The phase schedules are defined only while T * tolerance^2 > 1; beyond
    that the log term is nonpositive and the elimination machinery has no
    more work to do.  Callers commit to the current best arm instead.
    """
