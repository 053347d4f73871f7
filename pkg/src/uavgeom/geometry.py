"""Camera models, rigid poses, similarity transforms, and projection formulas.

Conventions used throughout the toolkit:

- World frame is right-handed with +z up.
- Camera frame follows the computer-vision convention: x right, y down,
  z forward along the optical axis.
- Poses are world-from-camera: ``x_world = R @ x_cam + center``.
- Pixel (u, v) samples the image at its center, i.e. at continuous
  coordinates (u + 0.5, v + 0.5); this makes render/unproject round
  trips exact.
- Angles are stored and reported in degrees.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

__all__ = [
    "CameraModel",
    "ViewPose",
    "Sim3Transform",
    "RayMap",
    "hfov_to_focal",
    "footprint_width",
    "altitude_for_footprint",
    "pixel_rays",
    "apply_sim3",
    "rotation_angle",
    "rotation_about_axis",
]

# Orthonormality drift tolerated when constructing pose/transform types.
ROTATION_TOL = 1e-9
# Looser drift tolerated on raw matrices fed to rotation_angle.
ROTATION_INPUT_TOL = 1e-6


def _freeze(a, shape, name):
    arr = np.array(a, dtype=float)
    if arr.shape != shape:
        raise ValidationError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


def _check_rotation(rotation, tol, name="rotation"):
    drift = np.abs(rotation.T @ rotation - np.eye(3)).max()
    det = np.linalg.det(rotation)
    if drift > tol or abs(det - 1.0) > tol:
        raise ValidationError(
            f"{name} is not orthonormal with det +1 "
            f"(drift {drift:.3e}, det {det:.12f}, tol {tol:g})"
        )


@dataclass(frozen=True)
class CameraModel:
    """Pinhole intrinsics plus image size in pixels."""

    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValidationError(f"image size must be >= 1, got {self.width}x{self.height}")
        if not (self.fx > 0 and self.fy > 0):
            raise ValidationError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if not all(math.isfinite(v) for v in (self.fx, self.fy, self.cx, self.cy)):
            raise ValidationError("intrinsics must be finite")

    @property
    def hfov(self) -> float:
        """Horizontal field of view in degrees: 2*atan(width / (2*fx))."""
        return math.degrees(2.0 * math.atan(self.width / (2.0 * self.fx)))

    @property
    def vfov(self) -> float:
        """Vertical field of view in degrees: 2*atan(height / (2*fy))."""
        return math.degrees(2.0 * math.atan(self.height / (2.0 * self.fy)))

    @classmethod
    def from_hfov(cls, hfov: float, width: int, height: int) -> "CameraModel":
        """Build a square-pixel camera from a horizontal field of view.

        The principal point sits at the center of the pixel grid,
        ((w-1)/2, (h-1)/2), so the center-row edge pixel looks exactly
        hfov/2 off the optical axis.
        """
        f = hfov_to_focal(hfov, width)
        return cls(width=width, height=height, fx=f, fy=f,
                   cx=(width - 1) / 2.0, cy=(height - 1) / 2.0)


@dataclass(frozen=True, eq=False)
class ViewPose:
    """World-from-camera rigid transform: a rotation and the camera center."""

    rotation: np.ndarray  # (3,3), world-from-camera
    center: np.ndarray    # (3,), camera center in the world frame
    # File-boundary cache: the exact (qw,qx,qy,qz) this pose was parsed from,
    # if any. Matrix->quaternion is not reproducible at 17 significant digits,
    # so the camera-file writer re-emits this verbatim for byte-identical
    # round trips. Never used by any math.
    _quat_wxyz: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "rotation", _freeze(self.rotation, (3, 3), "rotation"))
        object.__setattr__(self, "center", _freeze(self.center, (3,), "center"))
        _check_rotation(self.rotation, ROTATION_TOL)

    @classmethod
    def identity(cls) -> "ViewPose":
        return cls(np.eye(3), np.zeros(3))

    @property
    def optical_axis(self) -> np.ndarray:
        """Viewing direction (camera +z) expressed in the world frame."""
        return self.rotation[:, 2].copy()

    def camera_from_world(self, points: np.ndarray) -> np.ndarray:
        """Map world points (...,3) into the camera frame."""
        return (np.asarray(points, dtype=float) - self.center) @ self.rotation

    def world_from_camera(self, points: np.ndarray) -> np.ndarray:
        """Map camera-frame points (...,3) into the world frame."""
        return np.asarray(points, dtype=float) @ self.rotation.T + self.center

    def matrix(self) -> np.ndarray:
        """4x4 homogeneous world-from-camera matrix."""
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.center
        return m


@dataclass(frozen=True, eq=False)
class Sim3Transform:
    """3D similarity transform: x -> scale * rotation @ x + translation."""

    scale: float
    rotation: np.ndarray     # (3,3)
    translation: np.ndarray  # (3,)

    def __post_init__(self):
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValidationError(f"scale must be positive and finite, got {self.scale}")
        object.__setattr__(self, "rotation", _freeze(self.rotation, (3, 3), "rotation"))
        object.__setattr__(self, "translation", _freeze(self.translation, (3,), "translation"))
        _check_rotation(self.rotation, ROTATION_TOL)

    @classmethod
    def identity(cls) -> "Sim3Transform":
        return cls(1.0, np.eye(3), np.zeros(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform points of shape (...,3)."""
        pts = np.asarray(points, dtype=float)
        return self.scale * (pts @ self.rotation.T) + self.translation

    def apply_pose(self, pose: ViewPose) -> ViewPose:
        """Transform a camera pose: center maps like a point, rotation composes."""
        return ViewPose(self.rotation @ pose.rotation, self.apply(pose.center))

    def compose(self, first: "Sim3Transform") -> "Sim3Transform":
        """Return the transform equivalent to applying `first`, then `self`."""
        return Sim3Transform(
            self.scale * first.scale,
            self.rotation @ first.rotation,
            self.scale * (self.rotation @ first.translation) + self.translation,
        )

    def __matmul__(self, other: "Sim3Transform") -> "Sim3Transform":
        return self.compose(other)

    def inverse(self) -> "Sim3Transform":
        inv_s = 1.0 / self.scale
        inv_r = self.rotation.T
        return Sim3Transform(inv_s, inv_r, -inv_s * (inv_r @ self.translation))

    def matrix(self) -> np.ndarray:
        """4x4 homogeneous matrix [sR | t]."""
        m = np.eye(4)
        m[:3, :3] = self.scale * self.rotation
        m[:3, 3] = self.translation
        return m


@dataclass(frozen=True, eq=False)
class RayMap:
    """Per-pixel unit viewing directions in the camera frame."""

    directions: np.ndarray  # (H,W,3), unit norm

    def __post_init__(self):
        d = np.array(self.directions, dtype=float)
        if d.ndim != 3 or d.shape[2] != 3:
            raise ValidationError(f"directions must have shape (H,W,3), got {d.shape}")
        norms = np.linalg.norm(d, axis=2)
        if np.abs(norms - 1.0).max() > 1e-9:
            raise ValidationError("ray directions must have unit norm within 1e-9")
        d.setflags(write=False)
        object.__setattr__(self, "directions", d)

    @property
    def width(self) -> int:
        return self.directions.shape[1]

    @property
    def height(self) -> int:
        return self.directions.shape[0]


def hfov_to_focal(theta: float, width: float) -> float:
    """Focal length in pixels for a horizontal FOV `theta` (degrees): w / (2 tan(theta/2))."""
    if not 0.0 < theta < 180.0:
        raise ValueError(f"hfov must be in (0, 180) degrees, got {theta}")
    if width < 1:
        raise ValueError(f"image width must be >= 1, got {width}")
    return width / (2.0 * math.tan(math.radians(theta) / 2.0))


def footprint_width(altitude: float, theta: float) -> float:
    """Nadir ground-footprint width for flight height `altitude`: 2 H tan(theta/2)."""
    if not altitude > 0:
        raise ValueError(f"altitude must be positive, got {altitude}")
    if not 0.0 < theta < 180.0:
        raise ValueError(f"hfov must be in (0, 180) degrees, got {theta}")
    return 2.0 * altitude * math.tan(math.radians(theta) / 2.0)


def altitude_for_footprint(target_width: float, theta: float) -> float:
    """Flight height whose nadir footprint width equals `target_width`."""
    if not target_width > 0:
        raise ValueError(f"target footprint must be positive, got {target_width}")
    if not 0.0 < theta < 180.0:
        raise ValueError(f"hfov must be in (0, 180) degrees, got {theta}")
    return target_width / (2.0 * math.tan(math.radians(theta) / 2.0))


def pixel_rays(camera: CameraModel) -> RayMap:
    """Unit viewing direction through every pixel center of `camera`.

    Pixel (u, v) maps to ((u+0.5-cx)/fx, (v+0.5-cy)/fy, 1), normalized.
    """
    u = (np.arange(camera.width) + 0.5 - camera.cx) / camera.fx
    v = (np.arange(camera.height) + 0.5 - camera.cy) / camera.fy
    d = np.empty((camera.height, camera.width, 3))
    d[:, :, 0] = u[None, :]
    d[:, :, 1] = v[:, None]
    d[:, :, 2] = 1.0
    d /= np.linalg.norm(d, axis=2, keepdims=True)
    return RayMap(d)


def apply_sim3(transform: Sim3Transform, target):
    """Apply a similarity transform to a point array (...,3) or a ViewPose."""
    if isinstance(target, ViewPose):
        return transform.apply_pose(target)
    return transform.apply(target)


def rotation_angle(a: np.ndarray, b: np.ndarray) -> float:
    """Geodesic angle between two rotation matrices, in degrees.

    Mathematically acos((trace(a^T b) - 1) / 2); evaluated through
    atan2(sin, cos) so near-zero angles keep full precision instead of
    falling off the acos cliff.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    for name, r in (("a", a), ("b", b)):
        if r.shape != (3, 3):
            raise ValidationError(f"rotation {name} must be 3x3, got {r.shape}")
        _check_rotation(r, ROTATION_INPUT_TOL, name=f"rotation {name}")
    rel = a.T @ b
    cos = (np.trace(rel) - 1.0) / 2.0
    sin = 0.5 * math.sqrt(
        (rel[2, 1] - rel[1, 2]) ** 2
        + (rel[0, 2] - rel[2, 0]) ** 2
        + (rel[1, 0] - rel[0, 1]) ** 2
    )
    return math.degrees(math.atan2(sin, min(1.0, max(-1.0, cos))))


def rotation_about_axis(axis, angle_deg: float) -> np.ndarray:
    """Rotation matrix for a right-handed rotation about `axis` by `angle_deg`."""
    ax = np.asarray(axis, dtype=float)
    n = np.linalg.norm(ax)
    if n == 0:
        raise ValueError("rotation axis must be nonzero")
    x, y, z = ax / n
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    t = math.radians(angle_deg)
    return np.eye(3) + math.sin(t) * k + (1.0 - math.cos(t)) * (k @ k)
