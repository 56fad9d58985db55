"""Parameterization-independent importance sampling of environment maps."""

from .envmap import (
    AnalyticMap,
    ConstantSky,
    CubeMap,
    EnvMap,
    EquirectMap,
    GradientSky,
    SunSky,
    load_envmap,
    rasterize_analytic,
    save_envmap,
)
from .errors import BuildError, ConfigurationError, CorruptionError, DataError, FormatError
from .estimator import (
    EstimateReport,
    EstimatorConfig,
    estimate_irradiance,
    estimate_sphere_integral,
    variance_comparison,
)
from .importance import (
    ImportanceTable,
    SampleRecord,
    build_table,
    load_table,
    pdf,
    sample,
    save_table,
    table_to_images,
)
from .pfm import RasterImage, load_pfm, write_pfm
from .projection import (
    LatLon,
    SquarePoint,
    direction_to_latlon,
    direction_to_square,
    latlon_to_direction,
    make_direction,
    square_to_direction,
    square_to_sphere,
    sphere_to_square,
)

__version__ = "0.1.0"
