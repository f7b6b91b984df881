"""Exception types shared across the package.

The CLI maps these onto distinct exit codes: bad input data is a usage
problem (exit 2), a numerical failure is a runtime problem (exit 3).
"""


class MultilogisticError(Exception):
    """Base class for package errors."""


class InputDataError(MultilogisticError):
    """Malformed or infeasible input (files, shapes, parameter domains)."""


class NumericsError(MultilogisticError):
    """Numerical failure: divergence, non-finite values, no convergence."""
