"""Random star-shaped particles from kernel-smoothed Gaussian and gamma bases."""

__version__ = "0.1.0"

from .correlation import CorrelationCurve, corr_closed_form, sample_curve
from .errors import (
    DomainError,
    EstimationError,
    FitError,
    GeometryError,
    IntegrationError,
    NumericError,
    ParticleError,
)
from .estimate import empirical_variogram, estimate_dimension, estimate_from_fields
from .fractal import FractalProfile, bq_closed, bq_numeric, fractal_index_closed, hausdorff_dimension
from .geometry import TriangleMesh, export_obj, parse_obj, polygon_outline, triangulate
from .kernels import Kernel, KernelConstants, eval_kernel, kernel_constants
from .levy_basis import FieldMoments, LevyBasisSpec, field_moments, invert_parameters, sample_basis
from .numerics import QuadratureSpec
from .partition import EqualAreaPartition, partition_circle, partition_sphere
from .presets import PRESETS, CelestialPreset, get_preset
from .simulate import ParticleSpec, RadialField, SimulationConfig, simulate_ensemble, simulate_field
