"""Similarity and rigid registration.

Covers the closed-form least-squares similarity estimate between
corresponded point sets, trimmed ICP refinement between clouds without
correspondence, the scene-level alignment used by the evaluation
protocol, camera-center-only trajectory alignment, and the
LiDAR-to-SfM registration pipeline.
"""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    DegenerateConfigurationError,
    InsufficientDataError,
    NoCorrespondenceError,
    ValidationError,
)
from .geometry import Sim3Transform

__all__ = [
    "IcpParams",
    "AlignmentResult",
    "umeyama",
    "icp",
    "align_scene",
    "align_trajectory",
    "register_lidar_to_sfm",
]

# Rank test from the design ledger: reject when the second-smallest singular
# value of the cross-covariance is <= 1e-12 x the largest (collinear or
# coincident configurations); planar sets remain solvable.
DEGENERACY_RTOL = 1e-12


@dataclass(frozen=True)
class IcpParams:
    """Knobs for iterative closest point refinement.

    mode selects the solved group: "sim3" estimates a uniform scale,
    "se3" pins scale to 1. trim_fraction drops that fraction of the worst
    matches each iteration; max_correspondence_dist (meters) gates matches
    before trimming when set.
    """

    mode: str = "sim3"
    max_iterations: int = 50
    convergence_rel_tol: float = 1e-6
    trim_fraction: float = 0.1
    max_correspondence_dist: float = None

    def __post_init__(self):
        if self.mode not in ("sim3", "se3"):
            raise ValidationError(f"mode must be 'sim3' or 'se3', got {self.mode!r}")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be >= 1")
        if not self.convergence_rel_tol > 0:
            raise ValidationError("convergence_rel_tol must be positive")
        if not 0.0 <= self.trim_fraction < 0.5:
            raise ValidationError("trim_fraction must lie in [0, 0.5)")
        if self.max_correspondence_dist is not None and not self.max_correspondence_dist > 0:
            raise ValidationError("max_correspondence_dist must be positive when set")


@dataclass(frozen=True, eq=False)
class AlignmentResult:
    """A solved transform plus fit diagnostics.

    residual_trace holds the per-iteration trimmed RMS for solvers that
    iterate (single-shot solvers record one entry).
    """

    transform: Sim3Transform
    rms_residual: float
    inlier_count: int
    iterations_used: int
    residual_trace: tuple = ()


def _as_points(a, name):
    pts = np.asarray(a, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValidationError(f"{name} must have shape (N,3), got {pts.shape}")
    return pts


def umeyama(src, dst, with_scale: bool = True) -> Sim3Transform:
    """Least-squares similarity transform between corresponded point sets.

    Minimizes sum ||s R src_i + t - dst_i||^2 over Sim(3); s is pinned to 1
    when with_scale is False. Closed-form via SVD of the cross-covariance,
    with the determinant correction that excludes reflections.
    """
    src = _as_points(src, "src")
    dst = _as_points(dst, "dst")
    if src.shape[0] != dst.shape[0]:
        raise ValidationError(f"point counts differ: {src.shape[0]} vs {dst.shape[0]}")
    n = src.shape[0]
    if n < 3:
        raise InsufficientDataError(f"need at least 3 correspondences, got {n}")

    mu_src = src.mean(axis=0)
    mu_dst = dst.mean(axis=0)
    src_c = src - mu_src
    dst_c = dst - mu_dst

    cov = dst_c.T @ src_c / n
    u, d, vt = np.linalg.svd(cov)
    if not d[1] > DEGENERACY_RTOL * d[0]:
        raise DegenerateConfigurationError(
            "point configuration is rank-deficient (collinear or coincident)"
        )
    sign = np.sign(np.linalg.det(u) * np.linalg.det(vt))
    flip = np.array([1.0, 1.0, sign])
    rotation = (u * flip) @ vt

    if with_scale:
        var_src = (src_c * src_c).sum() / n
        scale = float((d * flip).sum() / var_src)
        if not scale > 0:
            raise DegenerateConfigurationError(f"recovered non-positive scale {scale}")
    else:
        scale = 1.0
    translation = mu_dst - scale * (rotation @ mu_src)
    return Sim3Transform(scale, rotation, translation)


def icp(src, dst, init: Sim3Transform = None, params: IcpParams = None) -> AlignmentResult:
    """Trimmed iterative closest point from cloud `src` onto cloud `dst`.

    Alternates L2 nearest-neighbor matching (k-d tree) with a trimmed
    Umeyama solve until the trimmed RMS improves by less than
    convergence_rel_tol (relative) or max_iterations is reached. The
    returned transform includes `init`. The recorded residual trace is
    non-increasing: an update that fails to improve is rolled back.
    """
    src = _as_points(src, "src")
    dst = _as_points(dst, "dst")
    if src.shape[0] == 0 or dst.shape[0] == 0:
        raise InsufficientDataError("icp requires non-empty clouds")
    if init is None:
        init = Sim3Transform.identity()
    if params is None:
        params = IcpParams()

    tree = cKDTree(dst)
    transform = init
    best = None  # (transform, rms, inliers)
    trace = []
    iterations = 0

    for it in range(1, params.max_iterations + 1):
        iterations = it
        moved = transform.apply(src)
        dist, idx = tree.query(moved)
        if params.max_correspondence_dist is not None:
            gate = dist <= params.max_correspondence_dist
            if not gate.any():
                raise NoCorrespondenceError(
                    f"no match within {params.max_correspondence_dist} m"
                )
            dist, idx = dist[gate], idx[gate]
            moved = moved[gate]
        keep = max(3, math.ceil((1.0 - params.trim_fraction) * dist.size))
        keep = min(keep, dist.size)
        order = np.argsort(dist, kind="stable")[:keep]

        rms = float(np.sqrt(np.mean(dist[order] ** 2)))
        if best is not None and rms >= best[1]:
            break  # floating-point plateau: keep the better previous fit
        trace.append(rms)
        best = (transform, rms, keep)
        if rms == 0.0:
            break
        if len(trace) >= 2 and (trace[-2] - rms) <= params.convergence_rel_tol * trace[-2]:
            break
        delta = umeyama(moved[order], dst[idx[order]], with_scale=(params.mode == "sim3"))
        transform = delta @ transform

    return AlignmentResult(best[0], best[1], best[2], iterations, tuple(trace))


def _consensus_fit(pred, gt, trim_fraction) -> Sim3Transform:
    """Pick the trim-ranking transform from deterministic candidates.

    The plain least-squares fit collapses its scale under gross outliers
    (they inflate the source variance), which would poison the residual
    ranking used for trimming. Exact fits on deterministic index triples
    provide outlier-free candidates with high probability; every
    candidate and the median-residual score are Sim(3)-equivariant, so
    the selection (and thus align_scene as a whole) stays equivariant.
    """
    n = pred.shape[0]
    candidates = []
    try:
        candidates.append(umeyama(pred, gt, with_scale=True))
    except DegenerateConfigurationError:
        pass
    third = n // 3
    if third >= 1:
        offsets = np.unique(np.linspace(0, third - 1, num=min(32, third), dtype=int))
        for i in offsets:
            idx = [int(i), int(i) + third, int(i) + 2 * third]
            if idx[2] >= n:
                continue
            try:
                candidates.append(umeyama(pred[idx], gt[idx], with_scale=True))
            except DegenerateConfigurationError:
                continue
    if not candidates:
        raise DegenerateConfigurationError(
            "no non-degenerate alignment candidate could be built"
        )

    def median_residual(t):
        r2 = np.sum((t.apply(pred) - gt) ** 2, axis=1)
        return float(np.median(r2))

    return min(candidates, key=median_residual)


def _gather_correspondences(pred_points, pred_masks, gt_points, gt_masks):
    pred_all, gt_all = [], []
    for i, (pp, pm, gp, gm) in enumerate(zip(pred_points, pred_masks, gt_points, gt_masks)):
        pp = np.asarray(pp, dtype=float)
        gp = np.asarray(gp, dtype=float)
        pm = np.asarray(pm, dtype=bool)
        gm = np.asarray(gm, dtype=bool)
        if pp.shape != gp.shape or pp.shape[:-1] != pm.shape or pm.shape != gm.shape:
            raise ValidationError(f"view {i}: point map / mask shapes disagree")
        joint = pm & gm
        if joint.any():
            pred_all.append(pp[joint])
            gt_all.append(gp[joint])
    if not pred_all:
        raise InsufficientDataError("no jointly valid pixels across views")
    return np.concatenate(pred_all), np.concatenate(gt_all)


def align_scene(pred_points, pred_masks, gt_points, gt_masks,
                trim_fraction: float = 0.2,
                icp_params: IcpParams = None) -> AlignmentResult:
    """Scene-level similarity alignment of predicted onto ground-truth geometry.

    Point maps are pixel-aligned, so jointly valid pixels give free
    correspondences: solve Umeyama, drop the worst `trim_fraction` of
    residuals, re-solve once, then refine with Sim(3) ICP against the
    aggregate ground-truth cloud. Deterministic for fixed inputs.
    """
    if not 0.0 <= trim_fraction < 0.5:
        raise ValidationError("trim_fraction must lie in [0, 0.5)")
    pred, gt = _gather_correspondences(pred_points, pred_masks, gt_points, gt_masks)
    if pred.shape[0] < 3:
        raise InsufficientDataError(f"need at least 3 jointly valid pixels, got {pred.shape[0]}")

    gt_radius = float(np.sqrt(np.mean(np.sum((gt - gt.mean(axis=0)) ** 2, axis=1))))
    gate = None
    if trim_fraction > 0.0 and pred.shape[0] > 3:
        rank_fit = _consensus_fit(pred, gt, trim_fraction)
        residuals = np.linalg.norm(rank_fit.apply(pred) - gt, axis=1)
        keep = max(3, math.ceil((1.0 - trim_fraction) * residuals.size))
        order = np.argsort(residuals, kind="stable")[:keep]
        # a fixed keep count can still admit a few gross outliers whose
        # squared residuals would wreck the least-squares re-solve; cut
        # anything far beyond the kept residual scale (floored at
        # floating-point noise relative to the scene extent)
        tau = max(5.0 * float(np.quantile(residuals[order], 0.9)),
                  1e-9 * max(gt_radius, 1.0))
        fine = order[residuals[order] <= tau]
        if fine.size < 3:
            fine = order
        estimate = umeyama(pred[fine], gt[fine], with_scale=True)
        gate = max(tau, 1e-6 * max(gt_radius, 1.0))
    else:
        estimate = umeyama(pred, gt, with_scale=True)

    if icp_params is None:
        icp_params = IcpParams(mode="sim3", trim_fraction=trim_fraction,
                               max_correspondence_dist=gate)
    elif icp_params.mode != "sim3":
        icp_params = replace(icp_params, mode="sim3")
    return icp(pred, gt, init=estimate, params=icp_params)


def align_trajectory(pred_centers, gt_centers) -> AlignmentResult:
    """Similarity alignment over camera centers only (the ATE-I diagnostic)."""
    pred = _as_points(pred_centers, "pred_centers")
    gt = _as_points(gt_centers, "gt_centers")
    if pred.shape[0] != gt.shape[0]:
        raise ValidationError(f"center counts differ: {pred.shape[0]} vs {gt.shape[0]}")
    if pred.shape[0] < 3:
        raise InsufficientDataError(f"need at least 3 cameras, got {pred.shape[0]}")
    transform = umeyama(pred, gt, with_scale=True)
    rms = float(np.sqrt(np.mean(np.sum((transform.apply(pred) - gt) ** 2, axis=1))))
    return AlignmentResult(transform, rms, pred.shape[0], 1, (rms,))


def register_lidar_to_sfm(lidar, sfm, init: Sim3Transform = None,
                          params: IcpParams = None) -> AlignmentResult:
    """Register a LiDAR cloud into an SfM coordinate system.

    Without `init`, the initial alignment matches centroids and RMS radii
    (uniform scale + translation, identity rotation); refinement is then
    rigid SE(3) ICP, so the scale is fixed after initialization. The
    returned transform is the full composition.
    """
    lidar = _as_points(lidar, "lidar")
    sfm = _as_points(sfm, "sfm")
    if lidar.shape[0] == 0 or sfm.shape[0] == 0:
        raise InsufficientDataError("registration requires non-empty clouds")

    if init is None:
        c_lidar = lidar.mean(axis=0)
        c_sfm = sfm.mean(axis=0)
        r_lidar = float(np.sqrt(np.mean(np.sum((lidar - c_lidar) ** 2, axis=1))))
        r_sfm = float(np.sqrt(np.mean(np.sum((sfm - c_sfm) ** 2, axis=1))))
        scale = r_sfm / r_lidar if r_lidar > 0 and r_sfm > 0 else 1.0
        init = Sim3Transform(scale, np.eye(3), c_sfm - scale * c_lidar)

    if params is None:
        params = IcpParams(mode="se3")
    elif params.mode != "se3":
        params = replace(params, mode="se3")
    return icp(lidar, sfm, init=init, params=params)
