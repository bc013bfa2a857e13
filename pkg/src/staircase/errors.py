"""Exception hierarchy shared by all modules."""


class StaircaseError(Exception):
    """Base class for every error raised by this package."""


class DomainError(StaircaseError, ValueError):
    """An argument lies outside the domain of the operation."""


class ParameterError(StaircaseError, ValueError):
    """A parameter violates a type invariant; ``key`` names the offending field."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


class ShapeError(StaircaseError, ValueError):
    pass


class PrecisionError(StaircaseError, ArithmeticError):
    """The extended-precision product overflowed."""


class ConvergenceError(StaircaseError, ArithmeticError):
    """Adaptive quadrature ran out of panels; carries the last two estimates."""

    def __init__(self, message, previous, current):
        super().__init__(f"{message} (last estimates {previous!r}, {current!r})")
        self.previous = previous
        self.current = current


class ResolutionError(StaircaseError, ValueError):
    pass


class CapacityError(StaircaseError, ValueError):
    pass


class ScheduleError(StaircaseError, ValueError):
    def __init__(self, stage, message):
        super().__init__(f"stage {stage}: {message}")
        self.stage = stage


class ConsistencyError(StaircaseError, RuntimeError):
    pass


class ConfigError(StaircaseError, ValueError):
    def __init__(self, key, message):
        super().__init__(f"config key {key!r}: {message}")
        self.key = key
