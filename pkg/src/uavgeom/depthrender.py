"""Z-buffer depth rendering, unprojection, and mesh-consistency filtering.

Point clouds are splatted into per-pixel depth with a z-buffer; triangle
meshes are rasterized with perspective-correct depth interpolation. Both
produce image-aligned depth maps whose invalid pixels hold 0 and travel
with an explicit mask. Mesh depth is only ever used to reject suspicious
cloud depth, never copied into an output.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .geometry import CameraModel, ViewPose, pixel_rays

__all__ = [
    "DepthMap",
    "TriangleMesh",
    "render_point_depth",
    "rasterize_mesh_depth",
    "unproject",
    "unproject_map",
    "filter_depth_outliers",
]

DEGENERATE_AREA = 1e-12


@dataclass(frozen=True, eq=False)
class DepthMap:
    """Per-pixel depth in meters; 0 marks an invalid pixel."""

    values: np.ndarray  # (H,W)
    camera_id: str = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValidationError(f"depth values must be 2-D, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("depth values must be finite")
        if (v < 0).any():
            raise ValidationError("negative depth values are forbidden")
        object.__setattr__(self, "values", v)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    def valid_mask(self) -> np.ndarray:
        return self.values > 0


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Indexed triangle soup: vertices (V,3) meters, triangles (T,3) indices."""

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        t = np.asarray(self.triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValidationError(f"vertices must have shape (V,3), got {v.shape}")
        if t.ndim != 2 or t.shape[1] != 3:
            raise ValidationError(f"triangles must have shape (T,3), got {t.shape}")
        if t.size and (t.min() < 0 or t.max() >= v.shape[0]):
            raise ValidationError("triangle indices out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        if t.size:
            a, b, c = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
            areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
            n_bad = int((areas <= DEGENERATE_AREA).sum())
            if n_bad:
                warnings.warn(
                    f"mesh contains {n_bad} degenerate triangle(s); they are skipped at render",
                    stacklevel=2,
                )


def _project(points, camera: CameraModel, pose: ViewPose):
    cam = pose.camera_from_world(points)
    z = cam[:, 2]
    u = camera.fx * cam[:, 0] / np.where(z != 0, z, 1.0) + camera.cx
    v = camera.fy * cam[:, 1] / np.where(z != 0, z, 1.0) + camera.cy
    return u, v, z


def render_point_depth(points, camera: CameraModel, pose: ViewPose,
                       splat_radius: int = 1):
    """Splat a point cloud into a z-buffered depth map.

    Each point with positive camera-frame depth covers a square splat of
    side 2*splat_radius+1 centered on its landing pixel; every covered
    pixel keeps the smallest depth. Returns (DepthMap, valid mask).
    """
    if splat_radius < 0:
        raise ValidationError("splat_radius must be >= 0")
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    h, w = camera.height, camera.width
    buf = np.full((h, w), np.inf)
    if pts.shape[0]:
        u, v, z = _project(pts, camera, pose)
        ok = (z > 0) & np.isfinite(u) & np.isfinite(v)
        u, v, z = u[ok], v[ok], z[ok]
        # clip far-out splats before the int cast to avoid overflow
        near = (u > -1e6) & (u < 1e6) & (v > -1e6) & (v < 1e6)
        u, v, z = u[near], v[near], z[near]
        col = np.floor(u).astype(np.int64)
        row = np.floor(v).astype(np.int64)
        r = splat_radius
        for dv in range(-r, r + 1):
            for du in range(-r, r + 1):
                cc = col + du
                rr = row + dv
                inside = (cc >= 0) & (cc < w) & (rr >= 0) & (rr < h)
                np.minimum.at(buf, (rr[inside], cc[inside]), z[inside])
    mask = np.isfinite(buf)
    values = np.where(mask, buf, 0.0)
    return DepthMap(values), mask


def rasterize_mesh_depth(mesh: TriangleMesh, camera: CameraModel, pose: ViewPose):
    """Rasterize a mesh into a z-buffered depth map.

    Depth is interpolated perspective-correctly (1/z linear in screen
    space). Triangles are drawn regardless of orientation; triangles with
    any vertex behind the camera and screen-degenerate triangles are
    skipped. Returns (DepthMap, valid mask).
    """
    h, w = camera.height, camera.width
    buf = np.full((h, w), np.inf)
    verts = mesh.vertices
    if verts.shape[0] and mesh.triangles.shape[0]:
        cam = pose.camera_from_world(verts)
        z_all = cam[:, 2]
        u_all = camera.fx * cam[:, 0] / np.where(z_all > 0, z_all, 1.0) + camera.cx
        v_all = camera.fy * cam[:, 1] / np.where(z_all > 0, z_all, 1.0) + camera.cy
        for tri in mesh.triangles:
            z = z_all[tri]
            if not (z > 1e-12).all():
                continue
            u = u_all[tri]
            v = v_all[tri]
            denom = (u[1] - u[0]) * (v[2] - v[0]) - (u[2] - u[0]) * (v[1] - v[0])
            if abs(denom) < DEGENERATE_AREA:
                continue
            c0 = max(0, int(math.floor(u.min() - 0.5)))
            c1 = min(w - 1, int(math.ceil(u.max() - 0.5)))
            r0 = max(0, int(math.floor(v.min() - 0.5)))
            r1 = min(h - 1, int(math.ceil(v.max() - 0.5)))
            if c0 > c1 or r0 > r1:
                continue
            uc = np.arange(c0, c1 + 1) + 0.5
            vc = np.arange(r0, r1 + 1) + 0.5
            pu, pv = np.meshgrid(uc, vc)
            l0 = ((u[1] - pu) * (v[2] - pv) - (u[2] - pu) * (v[1] - pv)) / denom
            l1 = ((u[2] - pu) * (v[0] - pv) - (u[0] - pu) * (v[2] - pv)) / denom
            l2 = 1.0 - l0 - l1
            inside = (l0 >= -1e-12) & (l1 >= -1e-12) & (l2 >= -1e-12)
            if not inside.any():
                continue
            inv_z = l0 / z[0] + l1 / z[1] + l2 / z[2]
            depth = np.where(inside & (inv_z > 0), 1.0 / np.where(inv_z > 0, inv_z, 1.0), np.inf)
            patch = buf[r0:r1 + 1, c0:c1 + 1]
            np.minimum(patch, depth, out=patch)
    mask = np.isfinite(buf)
    values = np.where(mask, buf, 0.0)
    return DepthMap(values), mask


def _unproject_core(values, camera: CameraModel, pose: ViewPose):
    rays = pixel_rays(camera).directions.copy()
    rays /= rays[:, :, 2:3]  # z = 1 so the stored value is the camera-frame depth
    cam_pts = np.asarray(values, dtype=float)[:, :, None] * rays
    return pose.world_from_camera(cam_pts.reshape(-1, 3)).reshape(cam_pts.shape)


def unproject(depth, camera: CameraModel, pose: ViewPose, mask=None) -> np.ndarray:
    """Lift valid depth pixels to world points through their pixel-center rays."""
    values = depth.values if isinstance(depth, DepthMap) else np.asarray(depth, dtype=float)
    if values.shape != (camera.height, camera.width):
        raise ValidationError(
            f"depth shape {values.shape} does not match camera {camera.height}x{camera.width}"
        )
    if mask is None:
        m = values > 0
    else:
        m = np.asarray(mask, dtype=bool)
        if m.shape != values.shape:
            raise ValidationError("mask shape does not match depth")
        m = m & (values > 0)
    return _unproject_core(values, camera, pose)[m]


def unproject_map(depth, camera: CameraModel, pose: ViewPose) -> np.ndarray:
    """Dense (H,W,3) point map; pixels with depth 0 collapse to the camera center."""
    values = depth.values if isinstance(depth, DepthMap) else np.asarray(depth, dtype=float)
    if values.shape != (camera.height, camera.width):
        raise ValidationError(
            f"depth shape {values.shape} does not match camera {camera.height}x{camera.width}"
        )
    return _unproject_core(values, camera, pose)


def filter_depth_outliers(lidar_depth: DepthMap, mesh_depth: DepthMap,
                          rel_tol: float = 0.02, abs_tol: float = 0.10):
    """Reject cloud depth that disagrees with mesh depth beyond tolerance.

    A pixel survives when the mesh has no opinion there, or when
    |d_cloud - d_mesh| <= max(abs_tol, rel_tol * d_mesh). Kept values are
    passed through untouched; mesh values are never written to the
    output. Returns (DepthMap, valid mask).
    """
    if rel_tol < 0 or abs_tol < 0:
        raise ValidationError("tolerances must be >= 0")
    lidar = lidar_depth.values
    mesh = mesh_depth.values
    if lidar.shape != mesh.shape:
        raise ValidationError(f"depth map shapes differ: {lidar.shape} vs {mesh.shape}")
    lidar_ok = lidar > 0
    mesh_ok = mesh > 0
    agree = np.abs(lidar - mesh) <= np.maximum(abs_tol, rel_tol * mesh)
    keep = lidar_ok & (~mesh_ok | agree)
    return DepthMap(np.where(keep, lidar, 0.0), camera_id=lidar_depth.camera_id), keep
