"""tatrec: reconstruction toolkit for circular and spherical mean data.

Modules
-------
model      phantoms, grids, detector sets, projections, visibility
bessel     self-contained J_m, Y_0 and Bessel zero tables
forward    analytic and quadrature projections of phantoms
fbp2d      filtered backprojection on the unit circle (three filtrations)
fbp3d      filtered backprojection on the unit sphere (three filtrations)
series     Dirichlet eigenfunction series on rectangles and boxes
wave       finite-difference wave propagation and pressure bridges
varspeed   variable-sound-speed inversion on a square
rangecheck range conditions for 2D disk data
metrics    error norms and masks
io         raw + JSON + PGM artifact formats
cli        command-line interface (`tatrec`)
"""

from .bessel import (
    BesselZeroTable,
    bessel_j,
    bessel_j0,
    bessel_j1,
    bessel_j_prime,
    bessel_y0,
    bessel_zeros,
)
from .errors import CFLError, ValidationError
from .experiments import (
    EXPERIMENTS,
    run_counterexample,
    run_exterior_source,
    run_partial_data,
)
from .fbp2d import pv_filter, recon_finch_log, recon_finch_log_filtered, recon_kun2d
from .fbp3d import recon_fpr_filtered, recon_fpr_laplacian, recon_kun3d
from .forward import add_noise, forward_analytic, forward_quadrature, mean_ball
from .io import (
    load_image,
    load_projections,
    load_recording,
    load_sidecar,
    save_image,
    save_projections,
    save_recording,
    write_pgm,
)
from .metrics import boundary_ring_mask, compare_report, disk_mask, linf, rel_l2
from .model import (
    ARC,
    BOX,
    CIRCLE,
    INTEGRAL,
    MEAN,
    RECT,
    SPHERE,
    Ball,
    DetectorSet,
    GridSpec,
    ImageGrid,
    Phantom,
    ProjectionData,
    VisibilityMap,
    convert_kind,
    interface_samples,
    make_detectors,
    normalize_to_unit,
    rasterize,
    sphere_measure,
    visibility_map,
)
from .rangecheck import (
    RangeCheckConfig,
    check_bessel_zeros,
    check_moments,
    check_orthogonality,
    disk_eigenpairs,
    run_range_checks,
)
from .series import (
    EigenBasis,
    default_mode_count,
    rect_eigenbasis,
    series_coefficients,
    series_sum,
)
from .varspeed import (
    DiscreteOperatorA,
    ModalCoefficients,
    boundary_moments,
    boundary_node_detectors,
    build_operator,
    coefficients_varspeed,
    recon_operator_form,
    recon_varspeed_series,
    spectral_multiplier,
)
from .wave import (
    SpeedField,
    WaveRecording,
    bump,
    bump_speed,
    means_from_pressure,
    pressure_from_means,
    uniform_speed,
    wave_forward,
)

__version__ = "0.1.0"
