"""The five evaluation metrics and the shared-alignment protocol.

A predicted reconstruction is scored against ground truth under one
scene-level similarity transform estimated from the dense geometry and
then applied consistently to points, camera centers, rotations, and
depths. Camera centers are additionally aligned independently
(trajectory-only) to expose the camera--scene inconsistency that the
shared alignment refuses to hide.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .alignment import IcpParams, align_scene, align_trajectory
from .errors import InsufficientDataError, ValidationError
from .geometry import CameraModel, RayMap, Sim3Transform, ViewPose, pixel_rays, rotation_angle

__all__ = [
    "ViewSample",
    "SceneSample",
    "PerViewMetrics",
    "EvalReport",
    "ChamferResult",
    "voxel_downsample",
    "chamfer_l1",
    "ray_error",
    "pose_ate",
    "absrel_depth",
    "rotation_mae",
    "evaluate_shared",
    "gap_statistic",
]

DEFAULT_VOXEL_SIZE = 0.25  # meters, applied to both clouds before Chamfer


@dataclass(frozen=True, eq=False)
class ViewSample:
    """One view of a paired prediction / ground-truth bundle.

    valid_mask is the joint evaluation mask: ground-truth depth must be
    positive wherever it is set, and predicted per-pixel quantities are
    read only there.
    """

    image_id: str
    gt_camera: CameraModel
    gt_pose: ViewPose
    gt_depth: np.ndarray      # (H,W) meters
    valid_mask: np.ndarray    # (H,W) bool
    pred_pose: ViewPose
    pred_depth: np.ndarray    # (H,W) meters
    pred_points: np.ndarray   # (H,W,3) predicted point map, world frame
    pred_camera: CameraModel = None

    def __post_init__(self):
        gt_depth = np.asarray(self.gt_depth, dtype=float)
        mask = np.asarray(self.valid_mask, dtype=bool)
        pred_depth = np.asarray(self.pred_depth, dtype=float)
        pred_points = np.asarray(self.pred_points, dtype=float)
        shape = (self.gt_camera.height, self.gt_camera.width)
        if gt_depth.shape != shape or mask.shape != shape or pred_depth.shape != shape:
            raise ValidationError(
                f"view {self.image_id}: per-pixel arrays must have shape {shape}"
            )
        if pred_points.shape != shape + (3,):
            raise ValidationError(
                f"view {self.image_id}: pred_points must have shape {shape + (3,)}"
            )
        if mask.any() and not (gt_depth[mask] > 0).all():
            raise ValidationError(
                f"view {self.image_id}: gt depth must be positive wherever the mask is set"
            )
        object.__setattr__(self, "gt_depth", gt_depth)
        object.__setattr__(self, "valid_mask", mask)
        object.__setattr__(self, "pred_depth", pred_depth)
        object.__setattr__(self, "pred_points", pred_points)


@dataclass(frozen=True, eq=False)
class SceneSample:
    """A multi-view prediction/ground-truth bundle for one evaluation sample."""

    views: tuple
    voxel_size: float = DEFAULT_VOXEL_SIZE

    def __post_init__(self):
        object.__setattr__(self, "views", tuple(self.views))
        if not self.voxel_size >= 0:
            raise ValidationError("voxel_size must be >= 0")


@dataclass(frozen=True)
class PerViewMetrics:
    image_id: str
    valid_pixels: int
    center_error: float
    rotation_error: float
    absrel: float = math.nan
    ray_error: float = math.nan


@dataclass(frozen=True, eq=False)
class EvalReport:
    """Per-sample values of the five metrics plus the alignment diagnostics."""

    absrel: float
    ray_error: float
    chamfer: float
    ate_shared: float
    ate_independent: float
    ate_gap: float
    rotation_mae: float
    alignment: Sim3Transform
    ate_shared_rmse: float
    ate_independent_rmse: float
    per_view: tuple = field(default=())

    def to_dict(self) -> dict:
        """JSON-ready dict; floats keep full precision through repr."""
        return {
            "absrel": self.absrel,
            "ray_error": self.ray_error,
            "chamfer": self.chamfer,
            "ate_shared": self.ate_shared,
            "ate_independent": self.ate_independent,
            "ate_gap": self.ate_gap,
            "rotation_mae": self.rotation_mae,
            "ate_shared_rmse": self.ate_shared_rmse,
            "ate_independent_rmse": self.ate_independent_rmse,
            "alignment": {
                "scale": self.alignment.scale,
                "rotation": self.alignment.rotation.tolist(),
                "translation": self.alignment.translation.tolist(),
            },
            "per_view": [
                {
                    "image_id": v.image_id,
                    "valid_pixels": v.valid_pixels,
                    "center_error": v.center_error,
                    "rotation_error": v.rotation_error,
                    "absrel": v.absrel,
                    "ray_error": v.ray_error,
                }
                for v in self.per_view
            ],
        }


@dataclass(frozen=True)
class ChamferResult:
    one_way_ab: float
    one_way_ba: float
    symmetric: float


def voxel_downsample(points, voxel: float) -> np.ndarray:
    """Replace all points in each cubic cell of side `voxel` by their centroid.

    Cells are indexed by floor(coord / voxel); output order follows the
    lexicographic order of cell indices (deterministic).
    """
    if not voxel > 0:
        raise ValueError(f"voxel size must be positive, got {voxel}")
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValidationError(f"points must have shape (N,3), got {pts.shape}")
    if pts.shape[0] == 0:
        return pts.copy()
    keys = np.floor(pts / voxel).astype(np.int64)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    sums = np.zeros((uniq.shape[0], 3))
    np.add.at(sums, inverse, pts)
    counts = np.bincount(inverse, minlength=uniq.shape[0])
    return sums / counts[:, None]


def _one_way_l1(a, b, tree_b, neighbor_metric):
    if neighbor_metric == "l1":
        dist, _ = tree_b.query(a, p=1)
        return float(np.mean(dist))
    # cross-toolkit mode: pick the L2 nearest neighbor, report its L1 distance
    _, idx = tree_b.query(a, p=2)
    return float(np.mean(np.abs(a - b[idx]).sum(axis=1)))


def chamfer_l1(a, b, neighbor_metric: str = "l1") -> ChamferResult:
    """One-way and symmetric Chamfer-L1 distances between two clouds.

    One-way D(A,B) = mean over a in A of min over b in B of ||a-b||_1,
    with neighbors selected under the L1 metric (the formula taken
    literally). neighbor_metric="l2" instead selects each neighbor under
    L2 and reports its L1 distance, for comparison against toolkits that
    reuse an L2 index. The symmetric value is the arithmetic mean of the
    two one-way terms.
    """
    if neighbor_metric not in ("l1", "l2"):
        raise ValidationError(f"neighbor_metric must be 'l1' or 'l2', got {neighbor_metric!r}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    for name, c in (("a", a), ("b", b)):
        if c.ndim != 2 or c.shape[1] != 3:
            raise ValidationError(f"cloud {name} must have shape (N,3), got {c.shape}")
        if c.shape[0] == 0:
            raise InsufficientDataError(f"cloud {name} is empty")
    ab = _one_way_l1(a, b, cKDTree(b), neighbor_metric)
    ba = _one_way_l1(b, a, cKDTree(a), neighbor_metric)
    return ChamferResult(ab, ba, 0.5 * (ab + ba))


def _rays_of(obj, name):
    if isinstance(obj, RayMap):
        return obj
    if isinstance(obj, CameraModel):
        return pixel_rays(obj)
    raise ValidationError(f"{name} must be a CameraModel or RayMap, got {type(obj).__name__}")


def _ray_angle_sum(pred, gt, mask, stride):
    pred_rays = _rays_of(pred, "pred")
    gt_rays = _rays_of(gt, "gt")
    if pred_rays.directions.shape != gt_rays.directions.shape:
        raise ValidationError(
            f"ray map dimensions differ: {pred_rays.directions.shape[:2]} vs "
            f"{gt_rays.directions.shape[:2]}"
        )
    p = pred_rays.directions[::stride, ::stride]
    g = gt_rays.directions[::stride, ::stride]
    if mask is None:
        m = np.ones(p.shape[:2], dtype=bool)
    else:
        m = np.asarray(mask, dtype=bool)
        if m.shape != pred_rays.directions.shape[:2]:
            raise ValidationError(
                f"mask shape {m.shape} does not match image {pred_rays.directions.shape[:2]}"
            )
        m = m[::stride, ::stride]
    pm = p[m]
    gm = g[m]
    # atan2 form of the unit-vector angle: exact near zero, unlike arccos
    angles = 2.0 * np.arctan2(np.linalg.norm(pm - gm, axis=1),
                              np.linalg.norm(pm + gm, axis=1))
    return float(np.degrees(angles).sum()), int(m.sum())


def ray_error(pred, gt, mask=None, stride: int = 1) -> float:
    """Mean angle (degrees) between predicted and ground-truth pixel rays.

    Rays live in the camera frame, so the value depends on intrinsics
    only, never on the predicted pose.
    """
    total, count = _ray_angle_sum(pred, gt, mask, stride)
    if count == 0:
        raise InsufficientDataError("no valid pixels for ray error")
    return total / count


def pose_ate(pred_centers_aligned, gt_centers) -> float:
    """Mean Euclidean camera-center error; centers come pre-aligned."""
    pred = np.asarray(pred_centers_aligned, dtype=float)
    gt = np.asarray(gt_centers, dtype=float)
    if pred.shape != gt.shape or pred.ndim != 2 or pred.shape[1] != 3:
        raise ValidationError(f"center arrays must match with shape (N,3): {pred.shape} vs {gt.shape}")
    if pred.shape[0] < 1:
        raise ValidationError("need at least one camera center")
    return float(np.mean(np.linalg.norm(pred - gt, axis=1)))


def absrel_depth(pred_depth_aligned, gt_depth, mask) -> float:
    """Mean absolute relative depth error |d_pred - d_gt| / d_gt over the mask."""
    pred = np.asarray(pred_depth_aligned, dtype=float)
    gt = np.asarray(gt_depth, dtype=float)
    m = np.asarray(mask, dtype=bool)
    if pred.shape != gt.shape or m.shape != gt.shape:
        raise ValidationError(
            f"depth/mask shapes disagree: {pred.shape}, {gt.shape}, {m.shape}"
        )
    if not m.any():
        raise InsufficientDataError("no valid pixels for absrel")
    g = gt[m]
    if not (g > 0).all():
        raise ValidationError("gt depth must be positive inside the mask")
    return float(np.mean(np.abs(pred[m] - g) / g))


def rotation_mae(pred_rotations, gt_rotations) -> float:
    """Mean geodesic angle (degrees) between paired rotation matrices."""
    pred = np.asarray(pred_rotations, dtype=float)
    gt = np.asarray(gt_rotations, dtype=float)
    if pred.shape != gt.shape or pred.ndim != 3 or pred.shape[1:] != (3, 3):
        raise ValidationError(
            f"rotation arrays must match with shape (N,3,3): {pred.shape} vs {gt.shape}"
        )
    if pred.shape[0] < 1:
        raise ValidationError("need at least one rotation pair")
    return float(np.mean([rotation_angle(p, g) for p, g in zip(pred, gt)]))


def gap_statistic(ate_shared: float, ate_independent: float) -> float:
    """Camera--scene inconsistency removed by independent camera alignment."""
    return ate_shared - ate_independent


def _gt_point_map(view: ViewSample) -> np.ndarray:
    rays = pixel_rays(view.gt_camera).directions.copy()
    rays /= rays[:, :, 2:3]  # scale so z == 1; depth is camera-frame z
    cam_pts = view.gt_depth[:, :, None] * rays
    return view.gt_pose.world_from_camera(cam_pts.reshape(-1, 3)).reshape(cam_pts.shape)


def evaluate_shared(sample: SceneSample,
                    trim_fraction: float = 0.2,
                    icp_params: IcpParams = None,
                    stride: int = 1,
                    neighbor_metric: str = "l1") -> EvalReport:
    """Score a scene sample under one shared scene-level alignment.

    Estimates the similarity transform from the dense point maps, applies
    it to predicted points, camera centers, rotations, and (scale only)
    depths, then computes all five metrics plus the independent-trajectory
    ATE and the gap between the two ATEs. `stride` subsamples pixels for
    the ray and depth terms on large frames.
    """
    views = sample.views
    if len(views) < 3:
        raise InsufficientDataError(f"need at least 3 views, got {len(views)}")
    if stride < 1:
        raise ValidationError("stride must be >= 1")

    gt_maps = [_gt_point_map(v) for v in views]
    masks = [v.valid_mask for v in views]
    pred_maps = [v.pred_points for v in views]

    result = align_scene(pred_maps, masks, gt_maps, masks,
                         trim_fraction=trim_fraction, icp_params=icp_params)
    s_star = result.transform

    # Dense geometry: shared alignment, voxel grid, Chamfer-L1.
    pred_cloud = s_star.apply(np.concatenate([p[m] for p, m in zip(pred_maps, masks) if m.any()]))
    gt_cloud = np.concatenate([g[m] for g, m in zip(gt_maps, masks) if m.any()])
    if sample.voxel_size > 0:
        pred_cloud = voxel_downsample(pred_cloud, sample.voxel_size)
        gt_cloud = voxel_downsample(gt_cloud, sample.voxel_size)
    chamfer = chamfer_l1(pred_cloud, gt_cloud, neighbor_metric=neighbor_metric).symmetric

    # Camera centers: shared vs independent alignment.
    pred_centers = np.array([v.pred_pose.center for v in views])
    gt_centers = np.array([v.gt_pose.center for v in views])
    pred_centers_shared = s_star.apply(pred_centers)
    ate_shared = pose_ate(pred_centers_shared, gt_centers)
    traj = align_trajectory(pred_centers, gt_centers)
    pred_centers_indep = traj.transform.apply(pred_centers)
    ate_independent = pose_ate(pred_centers_indep, gt_centers)
    shared_rmse = float(np.sqrt(np.mean(np.sum((pred_centers_shared - gt_centers) ** 2, axis=1))))
    indep_rmse = float(np.sqrt(np.mean(np.sum((pred_centers_indep - gt_centers) ** 2, axis=1))))

    # Rotations after the shared alignment.
    pred_rots = np.array([s_star.rotation @ v.pred_pose.rotation for v in views])
    gt_rots = np.array([v.gt_pose.rotation for v in views])
    rot_mae = rotation_mae(pred_rots, gt_rots)

    # Pixel-weighted means over all views for ray and depth terms.
    ray_sum = 0.0
    ray_count = 0
    absrel_sum = 0.0
    absrel_count = 0
    per_view = []
    for i, v in enumerate(views):
        m = v.valid_mask[::stride, ::stride]
        n = int(m.sum())
        view_absrel = math.nan
        view_ray = math.nan
        if n > 0:
            g = v.gt_depth[::stride, ::stride][m]
            p = s_star.scale * v.pred_depth[::stride, ::stride][m]
            err = np.abs(p - g) / g
            absrel_sum += float(err.sum())
            absrel_count += n
            view_absrel = float(err.mean())
            if v.pred_camera is not None:
                total, count = _ray_angle_sum(v.pred_camera, v.gt_camera, v.valid_mask, stride)
                ray_sum += total
                ray_count += count
                view_ray = total / count if count else math.nan
        per_view.append(PerViewMetrics(
            image_id=v.image_id,
            valid_pixels=n,
            center_error=float(np.linalg.norm(pred_centers_shared[i] - gt_centers[i])),
            rotation_error=rotation_angle(pred_rots[i], gt_rots[i]),
            absrel=view_absrel,
            ray_error=view_ray,
        ))
    if absrel_count == 0:
        raise InsufficientDataError("sample has no valid pixels overall")
    if ray_count == 0:
        raise ValidationError("no view carries predicted intrinsics; ray error is undefined")

    ate_gap = gap_statistic(ate_shared, ate_independent)
    return EvalReport(
        absrel=absrel_sum / absrel_count,
        ray_error=ray_sum / ray_count,
        chamfer=chamfer,
        ate_shared=ate_shared,
        ate_independent=ate_independent,
        ate_gap=ate_gap,
        rotation_mae=rot_mae,
        alignment=s_star,
        ate_shared_rmse=shared_rmse,
        ate_independent_rmse=indep_rmse,
        per_view=tuple(per_view),
    )
