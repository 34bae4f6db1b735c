"""Exception types shared across the package."""


class PoleError(ZeroDivisionError):
    """The resolvent was requested at (or numerically on) its pole."""


class SingularCorrectionError(ArithmeticError):
    """The Sherman-Morrison denominator of the rank-one correction vanished."""


class ConvergenceError(RuntimeError):
    """An iterative routine hit its iteration cap."""


class AssumptionError(ValueError):
    """A convolution kernel violates the sign/radial/monotone assumption."""


class GridMismatchError(ValueError):
    """Two objects live on different grids."""
