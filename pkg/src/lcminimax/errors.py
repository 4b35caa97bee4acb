"""Exception hierarchy; the CLI maps these onto exit codes."""


class LcMinimaxError(Exception):
    exit_code = 1


class ParameterError(LcMinimaxError, ValueError):
    """Invalid arguments or violated preconditions."""

    exit_code = 2


class DegenerateSampleError(ParameterError):
    """Too few distinct points (or a singular/collinear sample) for estimation."""


class NumericError(LcMinimaxError, ArithmeticError):
    """A numerical procedure failed to converge or produced an invalid result."""

    exit_code = 3
