"""Exception types raised by the model, spectral, and simulation routines."""


class ModelError(Exception):
    """Base class for every error raised by randfib."""


class OutOfRange(ModelError, ValueError):
    """A parameter violates the admissible region ``0 < a < 1``, ``b > 1 - a``, ``0 <= eps <= 1``."""

    def __init__(self, name: str, value: float, constraint: str):
        self.name = name
        self.value = value
        self.constraint = constraint
        super().__init__(f"OutOfRange({name}): {name}={value!r} violates {constraint}")


class SequenceOverflow(ModelError, OverflowError):
    """A linear-scale value left the double range; use the log-scale companion instead."""


class IndexOutOfRange(ModelError, IndexError):
    pass


class TooLarge(ModelError, ValueError):
    """Brute-force enumeration requested beyond the supported depth."""


class NoConvergence(ModelError, ArithmeticError):
    pass


class NoRoot(ModelError, ArithmeticError):
    """No positive root exists (typically eps >= eps*) or none was found before the cap."""


class Degenerate(ModelError, ValueError):
    pass


class DegenerateSample(Degenerate):
    pass


class NonPositive(Degenerate):
    pass
