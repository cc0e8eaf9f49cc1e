"""Exception types raised by the library.

Every error derives from :class:`LocalizerError` so callers (and the CLI) can
map the whole family to a single exit code.
"""


class LocalizerError(Exception):
    """Base class for all computation errors."""


class ShapeMismatch(LocalizerError, ValueError):
    pass


class NotHermitian(LocalizerError, ValueError):
    pass


class Degenerate(LocalizerError):
    """A matrix has an eigenvalue at or below the degeneracy threshold."""

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class NotUnitary(LocalizerError, ValueError):
    pass


class BoundViolated(LocalizerError):
    """A perturbation is too large for the rigidity estimate to certify anything."""


class GapCollapse(LocalizerError):
    """A linear path cannot be certified; ``t`` is the first degenerate sample, if any."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class PadTooSmall(LocalizerError, ValueError):
    pass


class SingularLocalizer(LocalizerError):
    def __init__(self, message, min_abs_eig=None):
        super().__init__(message)
        self.min_abs_eig = min_abs_eig


class OddSignature(LocalizerError):
    pass


class PlateauBroken(LocalizerError):
    """Signature changed below the kappa threshold (should be impossible)."""


class SignatureMismatch(LocalizerError):
    """Two forms have different signatures, so no homotopy can connect them."""
