"""Exception types raised by the numerical routines."""


class DqptError(Exception):
    """Base class for all package errors."""


class ConfigError(DqptError, ValueError):
    """Invalid run configuration or model parameters."""


class DegeneracyError(DqptError, ArithmeticError):
    """Gap closing or exceptional point: no usable biorthogonal basis."""


class ZeroNormError(DqptError, ArithmeticError):
    """A biorthogonal self-norm vanished."""


class UndefinedPhaseError(DqptError, ArithmeticError):
    """Phase of a (numerically) zero amplitude was requested."""


class GridTooCoarseError(DqptError, ArithmeticError):
    """Momentum grid too coarse to unwrap the geometric phase."""


class BranchPointError(DqptError, ArithmeticError):
    """artanh argument sits on a branch point (x = +1 or x = -1)."""
