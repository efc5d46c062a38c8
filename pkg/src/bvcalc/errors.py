"""Exception types shared across the package."""


class DomainError(ValueError):
    """A point or object lies outside the interval it must live in."""


class RangeError(ValueError):
    """A requested level/value is outside the attained range."""


class RepresentationError(ValueError):
    """The requested object cannot be represented in the closed function/measure class."""


class AbsoluteContinuityError(ValueError):
    """A Radon-Nikodym style operation was asked for measures that are not
    absolutely continuous with respect to each other."""


class QuadratureError(RuntimeError):
    """Requested quadrature tolerance unreachable within the configured subdivision budget."""


class CFLError(ValueError):
    """Time-step stability constraint violated."""


class ScenarioError(ValueError):
    """Scenario file is malformed; message carries field/line diagnostics."""
