"""Exception types raised across the package."""

import numpy as np


class ValidationError(ValueError):
    """An argument violates a documented precondition."""


class UnsupportedParameterError(ValueError):
    """A parameter value is valid in general but not supported by this routine."""


class FactorizationError(np.linalg.LinAlgError):
    """A covariance matrix could not be factorized even after adding jitter."""


class BudgetExceeded(RuntimeError):
    """A wall-clock budget ran out before the work completed."""
