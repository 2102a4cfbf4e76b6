"""Image-based rearward gap estimation for truck lane changes.

Recovers the distance to the vehicle behind in the target lane from five
manually annotated points per rear-view frame, using the metric lane
width as the ranging reference, then filters the per-frame ranges with a
weighted line fit and extrapolates to the lane-change instant to produce
TTC and required-deceleration conflict metrics.
"""

from .camera import (
    CameraIntrinsics,
    NormalizedPoint,
    PixelPoint,
    UndistortConvergenceError,
    distort_point,
    load_camera_config,
    normalized_to_pixel,
    pixel_to_distorted_normalized,
    reprojection_rmse,
    undistort_point,
)
from .conflict import (
    ConflictAssessment,
    WarningFlags,
    WarningThresholds,
    assess_conflict,
    required_deceleration,
    time_to_collision,
    warning_decision,
)
from .gap import (
    FrameAnnotation,
    GeometryError,
    Line2D,
    RangeEstimate,
    estimate_frame_range,
    fit_marker_line,
    lane_width_at_pov,
    median_lane_width,
    overlay_segments,
    range_from_width,
)
from .screening import (
    ChannelSeries,
    LaneChangeEvent,
    RampDatabase,
    ScreeningResult,
    detect_lane_change,
    haversine_m,
    ramp_proximity,
    screen_event,
    solar_zenith,
    sv_speed_change,
)
from .stats import (
    DistributionSummary,
    RadarComparison,
    RegressionReport,
    distribution_summary,
    linear_regression_anova,
    pov_appearance_rate,
    radar_error_stats,
)
from .store import (
    BundleValidationError,
    EventBundle,
    ResultRow,
    load_event_bundle,
    results_csv,
    run_pipeline,
    save_event_bundle,
)
from .synthetic import (
    CameraPose,
    SyntheticScene,
    make_default_camera,
    pitch_sensitivity_experiment,
    project_scene_point,
    splay_range,
    synthesize_channels,
    synthesize_event,
    synthesize_frame,
)
from .trajectory import (
    DiscardedEvent,
    GapResult,
    LineFit,
    compute_weights,
    extrapolate_to_lane_change,
    process_event_gap,
    weighted_line_fit,
)

__version__ = "0.1.0"
