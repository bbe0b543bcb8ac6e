"""Exception hierarchy shared by all modules."""


class TemperedToFError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(TemperedToFError, ValueError):
    """A numeric argument lies outside its admissible range."""


class StabilityError(TemperedToFError):
    """The spatial step violates ``h < 2D/v``; the march refuses to run."""

    def __init__(self, h, hmax):
        self.h = h
        self.hmax = hmax
        super().__init__(f"unstable discretization: h={h!r} must be < 2D/v={hmax!r}")


class NumericalBreakdownError(TemperedToFError, ArithmeticError):
    """A tridiagonal pivot vanished."""


class DegenerateWindowError(TemperedToFError, ValueError):
    """A power-law fit window is unusable (too short, overlapping, parallel lines)."""


class NonPositiveSampleError(TemperedToFError, ValueError):
    """A log-space fit met a current sample that is not strictly positive."""


class ConfigError(TemperedToFError):
    """Base class for configuration problems."""


class ConfigParseError(ConfigError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        where = f"line {lineno}: " if lineno is not None else ""
        super().__init__(where + message)


class ConfigValidationError(ConfigError, ValueError):
    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")
