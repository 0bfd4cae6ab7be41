class LabError(Exception):
    """
    Base class for every error raised by stoplab.
    """


class DegreeOverflowError(LabError):
    """
    A Laguerre degree above the configured cap was requested.
    """


class IntegrabilityError(LabError):
    """
    A weighted integral against exp(-x)dx (or a Gaussian) is not finite.
    """


class QuadratureError(LabError):
    """
    A quadrature that has to converge did not.
    """


class TreeSizeError(LabError):
    """
    The requested dyadic tree is deeper than the configured cap.
    """


class NotHonestError(LabError):
    """
    An operation that needs an honest time was given some other random time.
    """


class DegenerateDivisionError(LabError):
    """
    An enlargement drift term divides by zero with a nonzero numerator.
    """


class DegenerateFeatureError(LabError):
    """
    A moment has zero sample variance but a nonzero mean, so no z-score exists.
    """


class MonotonicityError(LabError):
    """
    The supremum identity was asked for a function that is not nondecreasing.
    """


class UnknownExperimentError(LabError):
    pass


class ConfigurationError(LabError):
    pass
