"""Simulation and resolution analysis for quantum imaging with undetected photons
in the position-correlation (near-field) configuration."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BracketError,
    ConfigError,
    GridResolutionError,
    InvalidParameterError,
    MalformedProfileError,
    NumericalError,
    QiupError,
    QuadratureResolutionError,
    ReducedKernelWarning,
)
from .imaging import (  # noqa: E402
    CameraGrid,
    ImageResult,
    OpticsParams,
    PointSet,
    RectAperture,
    RectApertures,
    SampledMap,
    count_rate,
    image_function,
    image_function_by_subtraction,
    point_pair,
    render,
    square_aperture_pair,
    uniform,
)
from .kernel import (  # noqa: E402
    MomentumGrid,
    SpdcParams,
    TransversePoint,
    amplitude_c,
    joint_density_bruteforce,
    joint_density_full,
    joint_density_reduced,
    phase_matching_sinc,
    pump_wavelength,
    reduced_kernel_validity,
)
from .resolution import (  # noqa: E402
    ResolutionCriterion,
    TwoPointProfile,
    beta,
    d_min_analytic,
    d_min_farfield,
    d_min_numeric,
    m0_from_betamax,
    psf_spread,
    psf_spread_object_plane,
    two_point_profile,
)
