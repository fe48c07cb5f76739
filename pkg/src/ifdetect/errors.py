"""Exception hierarchy shared by all ifdetect modules."""


class IFDetectError(Exception):
    """Base class for every error raised by the package."""


class TooFewSamples(IFDetectError):
    pass


class SingularCovariance(IFDetectError):
    pass


class DimensionMismatch(IFDetectError, ValueError):
    pass


class DomainError(IFDetectError, ValueError):
    pass


class WindowExceedsPrevQuiet(IFDetectError):
    """The window is longer than the preceding inactive duration."""


class NotDetectableWithW(IFDetectError):
    pass


class NotPFDetectable(IFDetectError):
    pass


class InconsistentAlarms(IFDetectError):
    """Inferred bounds are empty; the acceptance-region condition was violated."""


class OverlappingEpisodes(IFDetectError, ValueError):
    pass


class IntegrationDiverged(IFDetectError):
    pass


class ConfigurationError(IFDetectError, ValueError):
    pass
