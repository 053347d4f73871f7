"""Why one shared alignment: the ATE-S vs ATE-I gap, reproduced.

A feed-forward reconstruction predicts cameras and dense geometry in one
coordinate system. Aligning them to ground truth separately can hide a
mutual inconsistency: the trajectory alone may fit beautifully while the
cameras sit nowhere near their own point cloud. This script builds such
a prediction and scores it under the shared-alignment protocol.
"""

import numpy as np

import uavgeom as ug

rng = np.random.default_rng(12)


def build_views(camera_offset):
    views = []
    for i in range(8):
        cam = ug.CameraModel.from_hfov(75.0, 32, 24)
        center = np.array([(i % 4) * 12.0, (i // 4) * 12.0, 60.0])
        pose = ug.ViewPose(np.array([[1, 0, 0], [0, -1, 0], [0, 0, -1]], dtype=float),
                           center)
        depth = 55.0 + 6.0 * rng.random((24, 32))
        points = ug.unproject_map(depth, cam, pose)
        views.append(ug.ViewSample(
            image_id=f"v{i}", gt_camera=cam, gt_pose=pose, gt_depth=depth,
            valid_mask=np.ones((24, 32), dtype=bool),
            # the prediction: geometry is perfect, but every camera center
            # is displaced by the same vector in the scene frame
            pred_pose=ug.ViewPose(pose.rotation, center + camera_offset),
            pred_depth=depth, pred_points=points, pred_camera=cam))
    return ug.SceneSample(tuple(views), voxel_size=0.25)


print("=== consistent prediction (offset 0) ===")
report = ug.evaluate_shared(build_views(np.zeros(3)))
print(f"  chamfer {report.chamfer:.2e}  ATE-S {report.ate_shared:.2e}  "
      f"ATE-I {report.ate_independent:.2e}  gap {report.ate_gap:.2e}")

print("\n=== inconsistent prediction: cameras shifted 10 m off their own geometry ===")
offset = np.array([6.0, 8.0, 0.0])  # |offset| = 10
report = ug.evaluate_shared(build_views(offset))
print(f"  chamfer        {report.chamfer:.3e}   (dense geometry is perfect)")
print(f"  ATE-I          {report.ate_independent:.3e}   (trajectory-only alignment "
      "hides the shift)")
print(f"  ATE-S          {report.ate_shared:.4f}  (shared alignment exposes it)")
print(f"  gap            {report.ate_gap:.4f}")
print("\nIndependent alignment reports a near-zero pose error for a reconstruction")
print("whose cameras are 10 m away from their own point cloud; the shared protocol")
print("charges that inconsistency to the pose metric, where it belongs.")

print("\n=== the full five-metric report on a noisy prediction ===")
sample = build_views(np.zeros(3))
noisy_views = []
for v in sample.views:
    depth = v.pred_depth * (1 + 0.02 * rng.standard_normal(v.pred_depth.shape))
    rot = ug.rotation_about_axis(rng.normal(size=3), float(rng.uniform(-2, 2)))
    pose = ug.ViewPose(rot @ v.pred_pose.rotation,
                       v.pred_pose.center + rng.normal(scale=0.5, size=3))
    noisy_views.append(ug.ViewSample(
        image_id=v.image_id, gt_camera=v.gt_camera, gt_pose=v.gt_pose,
        gt_depth=v.gt_depth, valid_mask=v.valid_mask, pred_pose=pose,
        pred_depth=depth, pred_points=ug.unproject_map(depth, v.gt_camera, pose),
        pred_camera=v.gt_camera))
report = ug.evaluate_shared(ug.SceneSample(tuple(noisy_views), voxel_size=0.25))
print(f"  AbsRel       {report.absrel:.4f}")
print(f"  Ray Error    {report.ray_error:.4f} deg")
print(f"  Chamfer-L1   {report.chamfer:.4f} m")
print(f"  Pose ATE     {report.ate_shared:.4f} m  (independent: "
      f"{report.ate_independent:.4f}, gap {report.ate_gap:.4f})")
print(f"  Rotation MAE {report.rotation_mae:.4f} deg")
print(f"  alignment scale {report.alignment.scale:.6f}")
