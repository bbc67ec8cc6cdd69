"""Geodesic radii of two-dimensional Riemannian manifolds."""

from .errors import (BudgetExhausted, InvalidInput, LeftDomain, NotConverged, PointOutsideDomain,
                     PoleSingularity, ProfileCollapse, RadiusLabError, StepTooCoarse, SweepIncomplete,
                     UnsupportedFamily)
from .manifold import *  # noqa: F401,F403
from .geodesic import *  # noqa: F401,F403
from .jacobi import *  # noqa: F401,F403
from .radii import *  # noqa: F401,F403
from .gulliver import (CertificationReport, GulliverConfig, RatioBound, build_gulliver, certify,
                       default_config, gulliver_surface, ratio_bound)

__version__ = "0.1.0"
