"""Exception types shared across the package."""


class PwqnetError(Exception):
    """Base class for all package-specific errors."""


class OutOfDomain(PwqnetError):
    """A point lies outside the domain of a piecewise function."""


class ChainBroken(PwqnetError):
    """Pieces do not tile an interval (gap or overlap between regions)."""


class NotChained(ChainBroken):
    """A network construction received a piecewise function whose regions
    are not chained."""


class UnboundedRegion(PwqnetError):
    """A region has a non-finite bound where a bounded one is required."""


class Infeasible(PwqnetError):
    """The optimal control problem has an empty feasible set."""


class NonConvex(PwqnetError):
    """A value function failed a convexity check.  This signals a solver
    bug, not a valid problem outcome."""


class DimensionMismatch(PwqnetError):
    """Matrix dimensions are inconsistent."""


class FeatureMapMismatch(PwqnetError):
    """A network has the wrong feature map (or shape) for a construction."""


class ShapeMismatch(PwqnetError):
    """Raw input does not match a network's declared feature map."""


class RegionTooNarrow(PwqnetError):
    """A region is too narrow for the requested finite-difference stencil."""


class SamplingStalled(PwqnetError):
    """Rejection sampling accepted too small a fraction of draws."""


class Diverged(PwqnetError):
    """Training loss became non-finite."""
