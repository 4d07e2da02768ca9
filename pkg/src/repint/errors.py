"""Exception hierarchy shared by all modules."""


class RepintError(Exception):
    """Base class for every error raised by this package."""


class ShapeMismatch(RepintError, ValueError):
    pass


class NotIsometry(RepintError, ValueError):
    pass


class NotPSD(RepintError, ValueError):
    pass


class BadDims(RepintError, ValueError):
    pass


class InvalidModel(RepintError, ValueError):
    pass


class NotALifting(RepintError, ValueError):
    pass


class GammaNotIsometric(RepintError, ArithmeticError):
    """The least-squares gamma map failed its isometry certificate.

    Usually means the lifting handed to `defects` is not coisometric.
    """


class PhiNotUnitary(RepintError, ArithmeticError):
    """Phi_C or Phi_E failed its unitarity certificate (try a larger rank_tol)."""


class ParseError(RepintError, ValueError):
    pass


class IoError(RepintError, OSError):
    """A fixture or report file could not be read or written."""
