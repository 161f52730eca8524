"""Synthetic null hypersurfaces: entropy, optimal transport and the null energy condition.

A hypersurface is stored ray by ray: each null generator carries a quotient
weight, a gauge interval and a conditional density.  The modules build on
each other in this order: ``core`` (data model), ``measures`` (entropy),
``transport`` (monotone couplings), ``nec`` (energy condition and its
localization), ``geometry`` (areas, mean curvature, ray-length bound),
``smooth`` (model spacetimes), ``stability`` (limits of sequences).
"""

__version__ = "0.1.0"

from .core import (
    TIP, GaugeInterval, PointOnH, Ray, RayDensity, SyntheticNullHypersurface,
    TransversePair, causal_leq, gauge_measure_transform, psi_flow,
)
from .errors import (
    DomainError, InfeasibleError, InputError, ModelError, ParameterError,
    PreconditionError, SynthNullError,
)
from .geometry import (
    CrossSection, content_covariance, hawking_check, is_proper, minkowski_content,
    penrose_check, theta_estimate,
)
from .measures import (
    HMeasure, RayMeasureSlice, disintegration_check, entropy, entropy_power,
    integrate_transverse,
)
from .nec import (
    cd_check, invariance_check, localization_crosscheck, nce_search, nce_test,
)
from .smooth import (
    WarpedProductSpec, cone_hypersurface, integrate_geodesic,
    sphere_boundary_hypersurface,
)
from .stability import (
    ApproximationStep, MonotoneMap, kuratowski_limsup, limit_nce, verify_hypotheses,
)
from .transport import (
    CausalCoupling, DynamicalPlan, dynamical_plan, feasibility, interpolate,
    monotone_coupling,
)
