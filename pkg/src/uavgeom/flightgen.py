"""Synthetic UAV acquisition planners.

Serpentine nadir mapping grids, five-view oblique rigs, and controlled
HFOV-height groups in which every plan shares the same ground footprint
and station pattern while the projection geometry changes.

World frame: right-handed, +z up, ground plane at z = ground_elevation.
The region is the axis-aligned rectangle [0, x_extent] x [0, y_extent];
flight lines run along x and headings alternate 180 degrees between
lines.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import AltitudeRangeError, ValidationError
from .geometry import (
    CameraModel,
    ViewPose,
    altitude_for_footprint,
    footprint_width,
    rotation_about_axis,
)

__all__ = [
    "RegionSpec",
    "PlannedView",
    "FlightPlan",
    "plan_nadir_grid",
    "plan_oblique_rig",
    "gen_fa_groups",
]

DEFAULT_IMAGE_SIZE = (1024, 1024)
# +x = east, +y = north; oblique views tip the optical axis toward these.
OBLIQUE_DIRECTIONS = (
    ("oblique-E", np.array([1.0, 0.0])),
    ("oblique-W", np.array([-1.0, 0.0])),
    ("oblique-N", np.array([0.0, 1.0])),
    ("oblique-S", np.array([0.0, -1.0])),
)


@dataclass(frozen=True)
class RegionSpec:
    """Axis-aligned ground rectangle to cover."""

    x_extent: float
    y_extent: float
    ground_elevation: float = 0.0

    def __post_init__(self):
        if not (self.x_extent > 0 and self.y_extent > 0):
            raise ValidationError(
                f"region extents must be positive, got {self.x_extent} x {self.y_extent}"
            )


@dataclass(frozen=True, eq=False)
class PlannedView:
    image_id: str
    camera: CameraModel
    pose: ViewPose
    tag: str  # nadir | oblique-N/E/S/W


@dataclass(frozen=True, eq=False)
class FlightPlan:
    views: tuple
    hfov: float
    altitude: float
    forward_overlap: float
    side_overlap: float

    def __post_init__(self):
        object.__setattr__(self, "views", tuple(self.views))
        if not self.altitude > 0:
            raise ValidationError(f"altitude must be positive, got {self.altitude}")
        for name, ov in (("forward_overlap", self.forward_overlap),
                         ("side_overlap", self.side_overlap)):
            if not 0.0 <= ov < 1.0:
                raise ValidationError(f"{name} must lie in [0, 1), got {ov}")
        for v in self.views:
            if not v.pose.optical_axis[2] < 0:
                raise ValidationError(f"view {v.image_id} does not look below the horizon")


def _nadir_rotation(heading_sign: float) -> np.ndarray:
    # camera x along the heading, z straight down; right-handed, det +1
    x_cam = np.array([heading_sign, 0.0, 0.0])
    z_cam = np.array([0.0, 0.0, -1.0])
    y_cam = np.cross(z_cam, x_cam)
    return np.column_stack([x_cam, y_cam, z_cam])


def _line_positions(extent: float, spacing: float) -> np.ndarray:
    # stations at 0, spacing, ... up to the far edge (inclusive)
    n = int(math.floor(extent / spacing + 1e-9)) + 1
    return np.arange(n) * spacing


def _serpentine_stations(region: RegionSpec, along_spacing: float, line_spacing: float):
    xs = _line_positions(region.x_extent, along_spacing)
    ys = _line_positions(region.y_extent, line_spacing)
    stations = []
    for j, y in enumerate(ys):
        heading = 1.0 if j % 2 == 0 else -1.0
        line_xs = xs if heading > 0 else xs[::-1]
        for x in line_xs:
            stations.append((float(x), float(y), heading))
    return stations


def _grid_plan(region, altitude, camera, hfov, forward_overlap, side_overlap,
               along_spacing, line_spacing):
    z = region.ground_elevation + altitude
    views = []
    for k, (x, y, heading) in enumerate(
            _serpentine_stations(region, along_spacing, line_spacing)):
        pose = ViewPose(_nadir_rotation(heading), np.array([x, y, z]))
        views.append(PlannedView(f"nadir_{k:04d}", camera, pose, "nadir"))
    return FlightPlan(tuple(views), hfov, altitude, forward_overlap, side_overlap)


def _spacings(camera: CameraModel, footprint_across: float,
              forward_overlap: float, side_overlap: float):
    # along-track footprint from the vertical FOV implied by the image aspect
    footprint_along = footprint_across * camera.height / camera.width
    return footprint_along * (1.0 - forward_overlap), footprint_across * (1.0 - side_overlap)


def plan_nadir_grid(region: RegionSpec, altitude: float, hfov: float,
                    forward_overlap: float = 0.9, side_overlap: float = 0.8,
                    image_size=DEFAULT_IMAGE_SIZE) -> FlightPlan:
    """Serpentine nadir mapping grid over `region`.

    Across-track line spacing is footprint*(1-side_overlap) and
    along-track station spacing is footprint*(1-forward_overlap), with
    the along-track footprint following the image aspect. Spacings larger
    than the region degrade to a single line / single station.
    """
    if not altitude > 0:
        raise ValueError(f"altitude must be positive, got {altitude}")
    _check_overlaps(forward_overlap, side_overlap)
    camera = CameraModel.from_hfov(hfov, *image_size)
    across = footprint_width(altitude, hfov)
    along_spacing, line_spacing = _spacings(camera, across, forward_overlap, side_overlap)
    return _grid_plan(region, altitude, camera, hfov,
                      forward_overlap, side_overlap, along_spacing, line_spacing)


def plan_oblique_rig(region: RegionSpec, altitude: float, hfov: float,
                     tilt: float = 45.0,
                     forward_overlap: float = 0.9, side_overlap: float = 0.8,
                     image_size=DEFAULT_IMAGE_SIZE) -> FlightPlan:
    """Five-view rig: one nadir plus four views tilted toward +-x and +-y.

    Stations replicate the nadir-grid geometry; every station yields five
    views whose oblique optical axes make exactly `tilt` degrees with the
    nadir axis.
    """
    if not 0.0 < tilt < 90.0:
        raise ValueError(f"tilt must lie in (0, 90) degrees, got {tilt}")
    if not altitude > 0:
        raise ValueError(f"altitude must be positive, got {altitude}")
    _check_overlaps(forward_overlap, side_overlap)
    camera = CameraModel.from_hfov(hfov, *image_size)
    across = footprint_width(altitude, hfov)
    along_spacing, line_spacing = _spacings(camera, across, forward_overlap, side_overlap)
    z = region.ground_elevation + altitude
    views = []
    for k, (x, y, heading) in enumerate(
            _serpentine_stations(region, along_spacing, line_spacing)):
        center = np.array([x, y, z])
        nadir_rot = _nadir_rotation(heading)
        views.append(PlannedView(f"sta{k:04d}_nadir", camera,
                                 ViewPose(nadir_rot, center), "nadir"))
        for tag, direction in OBLIQUE_DIRECTIONS:
            # rotate about the horizontal axis perpendicular to the target
            # direction so the optical axis tips from straight down toward it
            axis = np.array([-direction[1], direction[0], 0.0])
            rot = rotation_about_axis(axis, -tilt) @ nadir_rot
            short = tag.split("-")[1]
            views.append(PlannedView(f"sta{k:04d}_oblique{short}", camera,
                                     ViewPose(rot, center), tag))
    return FlightPlan(tuple(views), hfov, altitude, forward_overlap, side_overlap)


def gen_fa_groups(region: RegionSpec, hfov_list, target_footprint: float,
                  altitude_limits=(40.0, 210.0),
                  forward_overlap: float = 0.9, side_overlap: float = 0.8,
                  image_size=DEFAULT_IMAGE_SIZE, clamp: bool = False):
    """Controlled HFOV-height group: one nadir plan per HFOV, same footprint.

    Each plan flies at the altitude whose footprint equals
    `target_footprint`, so all plans share one station ground pattern and
    image content stays comparable while the projection geometry changes.
    Altitudes outside `altitude_limits` raise AltitudeRangeError naming
    the offending HFOV, unless `clamp` downgrades that to a warning.
    """
    hfov_list = list(hfov_list)
    if not hfov_list:
        raise ValueError("hfov_list must be non-empty")
    if not target_footprint > 0:
        raise ValueError(f"target footprint must be positive, got {target_footprint}")
    _check_overlaps(forward_overlap, side_overlap)
    lo, hi = altitude_limits
    width, height = image_size
    # one shared station pattern derived from the target footprint
    along_spacing = target_footprint * (height / width) * (1.0 - forward_overlap)
    line_spacing = target_footprint * (1.0 - side_overlap)

    plans = []
    for theta in hfov_list:
        altitude = altitude_for_footprint(target_footprint, theta)
        if not lo <= altitude <= hi:
            message = (f"HFOV {theta} deg needs altitude {altitude:.2f} m, "
                       f"outside limits [{lo}, {hi}] m")
            if not clamp:
                raise AltitudeRangeError(message)
            warnings.warn(message + "; clamping", stacklevel=2)
            altitude = min(max(altitude, lo), hi)
        camera = CameraModel.from_hfov(theta, width, height)
        plans.append(_grid_plan(region, altitude, camera, theta,
                                forward_overlap, side_overlap,
                                along_spacing, line_spacing))
    return plans


def _check_overlaps(forward_overlap, side_overlap):
    for name, ov in (("forward_overlap", forward_overlap), ("side_overlap", side_overlap)):
        if not 0.0 <= ov < 1.0:
            raise ValueError(f"{name} must lie in [0, 1), got {ov}")
