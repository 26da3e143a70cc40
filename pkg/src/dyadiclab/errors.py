"""Exception types shared across the toolkit."""


class DyadicLabError(Exception):
    """Base class for all toolkit errors."""


class GridMismatchError(DyadicLabError):
    """Two operands live on different grids."""


class NyquistError(DyadicLabError):
    """A requested operation would move frequency content out of the grid band."""


class FeasibilityError(DyadicLabError):
    """Requested construction does not fit on the grid; message states what would."""


class ConvergenceError(DyadicLabError):
    """An iterative solver failed to converge."""


class ConfigError(DyadicLabError):
    """Invalid experiment configuration."""
