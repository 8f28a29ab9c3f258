"""Exception hierarchy shared by all modules."""


class QSCError(ValueError):
    """Base class for every error raised by this package."""


class NonSquare(QSCError):
    pass


class NonHermitian(QSCError):
    pass


class NotPSD(QSCError):
    pass


class SingularBeyondCutoff(QSCError):
    pass


class ShapeMismatch(QSCError):
    pass


class DimensionMismatch(QSCError):
    pass


class NotPSDBlock(QSCError):
    """The 2x2 block matrix is not positive semidefinite.

    ``min_eig`` holds the most negative eigenvalue found, ``witness`` its
    eigenvector.
    """

    def __init__(self, min_eig, witness=None):
        super().__init__(f"block matrix not PSD: min eigenvalue {min_eig:.3e}")
        self.min_eig = float(min_eig)
        self.witness = witness


class NotFullAlgebra(QSCError):
    pass


class NotASystem(QSCError):
    pass


class AlreadyUnital(QSCError):
    pass


class NegativeTime(QSCError):
    pass


class IndexNotInT(QSCError):
    pass


class ValueNotInT(QSCError):
    pass


class NotUnitalCP(QSCError):
    pass


class ZeroEntryInZeta(QSCError):
    pass


class UnitalInput(QSCError):
    pass


class DegenerateAction(QSCError):
    pass


class PropertyNotApplicable(QSCError):
    pass


class UnknownDemo(QSCError):
    pass


class ConfigError(QSCError):
    """Schema or semantic problem in a configuration; ``path`` is a JSON pointer."""

    def __init__(self, message, path=""):
        super().__init__(f"{path or '/'}: {message}")
        self.path = path
