"""
Exception hierarchy for wavepax.
"""

from typing import Optional


class WavepaxError(Exception):
    """Base class for every error raised by the library."""


class ParameterError(WavepaxError, ValueError):
    """Oscillator parameters are missing, nonpositive or inconsistent."""


class DomainError(WavepaxError, ValueError):
    """An argument lies outside the domain of an operation."""


class HorizonError(WavepaxError):
    """
    A trajectory cannot be continued (zero of the flow, blow-up, step underflow).

    Attributes:
        last_valid_time: Largest time at which the solution is still trusted
    """

    def __init__(self, message: str, last_valid_time: Optional[float] = None):
        super().__init__(message)
        self.last_valid_time = last_valid_time


class InconsistentHorizonError(HorizonError):
    """Two independent horizon estimates contradict each other."""


class IntegrabilityError(WavepaxError):
    """A quadrature produced a non-finite value."""


class ConsistencyError(WavepaxError):
    """A measured residual exceeds a proven bound."""


class GridError(WavepaxError):
    """
    Mass reached the boundary band of a periodic grid.

    Attributes:
        time: Time of the offending field, if known
    """

    def __init__(self, message: str, time: Optional[float] = None):
        super().__init__(message)
        self.time = time


class CertificateError(WavepaxError):
    """An observability constant cannot be certified."""


class ConfigError(WavepaxError):
    """
    Experiment configuration is invalid.

    Attributes:
        pointer: JSON pointer of the offending entry ("" for the document)
    """

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer
