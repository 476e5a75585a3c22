"""Exception hierarchy shared by all engines."""


class GCFError(Exception):
    """Base class for every error raised by gcflab."""


class ConvexityLost(GCFError):
    def __init__(self, message, node=None, value=None):
        super().__init__(message)
        self.node = node
        self.value = value


class GridMismatch(GCFError):
    pass


class StepTooLarge(GCFError):
    pass


class InsufficientSamples(GCFError):
    pass


class AlphaEqualsOne(GCFError):
    pass


class TimeOrder(GCFError):
    pass


class EmptyInterior(GCFError):
    pass


class DivergentIntegral(GCFError):
    pass


class ShootingFailed(GCFError):
    pass


class NotConverged(GCFError):
    pass


class EpsilonOutOfRange(GCFError):
    pass


class SolitonDomainMismatch(GCFError):
    pass


class NormalMatchFailed(GCFError):
    pass


class ConfigInvalid(GCFError):
    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class SinkUnavailable(GCFError):
    pass


class UnknownSeries(GCFError):
    pass
