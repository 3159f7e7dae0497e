"""Multi-source angle-of-arrival localization workbench.

Simulation of bearings-only scenarios, classical estimators (PLS, WIVE,
PSO-driven ML), rasterization to the image representation used by the
segmentation pipeline, decode of probability maps back to world
coordinates, and Monte-Carlo evaluation.
"""

__version__ = "0.1.0"

from .errors import (
    AoaLocError,
    DegenerateGeometryError,
    IllConditionedGeometryError,
    InsufficientDataError,
    OutOfRegionError,
    PgmFormatError,
    TrajectoryFitError,
)
from .geometry import DEFAULT_REGION, Region, WorldPoint, true_bearing, wrap_angle
from .scenario import (
    AoABearing,
    MeasurementSet,
    PlatformTrajectory,
    Scenario,
    ScenarioConfig,
    SourceSet,
    load_scenario,
    save_scenario,
    simulate_scenario,
)
from .estimators import (
    Method,
    PsoConfig,
    SourceEstimate,
    ml_cost,
    pls_estimate,
    pso_ml_estimate,
    wive_estimate,
)
from .raster import (
    DEFAULT_GRID,
    GridSpec,
    InputImage,
    LabelImage,
    PixelCoord,
    fractional_pixel,
    pixel_to_world,
    render_input,
    render_label,
    world_to_pixel,
)
from .postprocess import (
    Component,
    ComponentSet,
    ProbabilityMap,
    binarize,
    connected_components,
    decode_probability_map,
)
from .metrics import (
    MatchResult,
    MetricsReport,
    RunRecord,
    benchmark_timings,
    count_rmse,
    localization_rmse,
    match_estimates,
    monte_carlo,
)
from .pgm import (
    read_input_pgm,
    read_label_pgm,
    read_probability_pgm,
    write_input_pgm,
    write_label_pgm,
    write_probability_pgm,
)
