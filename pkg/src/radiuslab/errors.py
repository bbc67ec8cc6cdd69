"""Exception hierarchy shared by every module."""


class RadiusLabError(Exception):
    """Base class for all errors raised by radiuslab."""


class InvalidInput(RadiusLabError, ValueError):
    pass


class PointOutsideDomain(RadiusLabError, ValueError):
    pass


class PoleSingularity(RadiusLabError):
    """A theta-dependent quantity was requested exactly at the pole.

    Radial quantities are still available on the exception.
    """

    def __init__(self, message, gauss_curvature=None):
        super().__init__(message)
        self.gauss_curvature = gauss_curvature


class ProfileCollapse(RadiusLabError):
    """The warp function reached zero before the end of the domain."""

    def __init__(self, r_star):
        super().__init__(f"warp function vanishes at r* = {r_star:.12g}")
        self.r_star = r_star


class LeftDomain(RadiusLabError):
    def __init__(self, t_star, path=None):
        super().__init__(f"geodesic left the chart at arclength t* = {t_star:.12g}")
        self.t_star = t_star
        self.path = path


class StepTooCoarse(RadiusLabError):
    pass


class NotConverged(RadiusLabError):
    pass


class BudgetExhausted(RadiusLabError):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class UnsupportedFamily(RadiusLabError):
    pass


class SweepIncomplete(RadiusLabError):
    def __init__(self, message, counts=None):
        super().__init__(message)
        self.counts = counts or {}
