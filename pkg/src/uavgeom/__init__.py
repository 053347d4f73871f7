"""Geometry evaluation and synthetic-acquisition toolkit for UAV 3D reconstruction.

The package bundles a shared-alignment evaluation protocol (five
metrics under one scene-level similarity transform), similarity/rigid
registration solvers, depth rendering and unprojection, UAV flight-plan
generators, bit-exact file formats, and the batch harness that
aggregates benchmark tables.
"""

from .alignment import (
    AlignmentResult,
    IcpParams,
    align_scene,
    align_trajectory,
    icp,
    register_lidar_to_sfm,
    umeyama,
)
from .dataio import (
    MANIFEST_SCHEMA_VERSION,
    ManifestView,
    SceneManifest,
    read_cameras,
    read_depth,
    read_manifest,
    read_mask,
    read_mesh,
    read_pointcloud,
    write_cameras,
    write_depth,
    write_manifest,
    write_mask,
    write_mesh,
    write_pointcloud,
)
from .depthrender import (
    DepthMap,
    TriangleMesh,
    filter_depth_outliers,
    rasterize_mesh_depth,
    render_point_depth,
    unproject,
    unproject_map,
)
from .errors import (
    AltitudeRangeError,
    CoverageError,
    DegenerateConfigurationError,
    FormatError,
    InsufficientDataError,
    NoCorrespondenceError,
    ParseError,
    TruncatedFileError,
    UavgeomError,
    UndefinedBaselineError,
    ValidationError,
)
from .flightgen import (
    FlightPlan,
    PlannedView,
    RegionSpec,
    gen_fa_groups,
    plan_nadir_grid,
    plan_oblique_rig,
)
from .geometry import (
    CameraModel,
    RayMap,
    Sim3Transform,
    ViewPose,
    altitude_for_footprint,
    apply_sim3,
    footprint_width,
    hfov_to_focal,
    pixel_rays,
    rotation_about_axis,
    rotation_angle,
)
from .harness import (
    AggregationSpec,
    BenchmarkRow,
    BenchmarkTable,
    ViewPrediction,
    aggregate_rows,
    emit_report,
    oblique_nadir_gap,
    relative_reduction,
    run_eval,
)
from .metrics import (
    ChamferResult,
    EvalReport,
    PerViewMetrics,
    SceneSample,
    ViewSample,
    absrel_depth,
    chamfer_l1,
    evaluate_shared,
    gap_statistic,
    pose_ate,
    ray_error,
    rotation_mae,
    voxel_downsample,
)

__version__ = "0.1.0"
