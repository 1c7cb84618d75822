"""Exception hierarchy shared by every module of the package."""


class PanelsegError(Exception):
    """Base class for all errors raised by panelseg."""


class ParseError(PanelsegError, ValueError):
    """Malformed CSV or plan input."""


class DimensionError(PanelsegError, ValueError):
    """Array shapes or index ranges are inconsistent."""


class DomainError(PanelsegError, ValueError):
    """A parameter lies outside its admissible range."""


class WindowTooShortError(DimensionError):
    """The trimmed candidate set of a window is empty."""


class DegenerateError(PanelsegError, ArithmeticError):
    """A numerical quantity collapsed (zero variance, all-zero residuals)."""


class ConfigError(PanelsegError, ValueError):
    """Invalid detector or experiment configuration."""


class ThresholdError(PanelsegError, RuntimeError):
    """The threshold callback failed for a segmentation node."""
