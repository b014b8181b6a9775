"""Exception types raised by the numerical routines."""


class ToeplitzError(Exception):
    """Base class for all errors raised by this package."""


class PoleHit(ToeplitzError):
    """Evaluation point lies on (or numerically at) a pole."""


class IllConditioned(ToeplitzError):
    """A linear solve or interpolation exceeded the condition threshold."""


class RankUndetermined(ToeplitzError):
    """Hankel singular values straddle the rank tolerance."""


class InsufficientWindow(ToeplitzError):
    """Not enough coefficients for the requested Hankel/Toeplitz size."""


class DegenerateDet(ToeplitzError):
    """det L(lambda, z) vanishes identically in both variables."""


class DSingular(ToeplitzError):
    """R0 - gamma Q B - lambda I is singular."""
