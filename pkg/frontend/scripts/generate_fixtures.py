#!/usr/bin/env python3
"""Generate cross-path equivalence fixtures for the TypeScript bindings.

Writes randomized scenes and solver cases through the core's own file
formats, then computes the expected results with in-process core calls
on the data exactly as loaded back from those files. The TS tests read
the same files, push them through the bindings (files -> CLI -> JSON),
and require bit-for-bit agreement.

Depth values are quantized to float32 before anything is written or
evaluated, because the depth format stores float32; both paths therefore
see identical bits.
"""

import argparse
import json
import os
import shutil

import numpy as np

import uavgeom as ug
from uavgeom.harness import _build_sample, _load_gt_views


def fresh_dir(path):
    shutil.rmtree(path, ignore_errors=True)
    os.makedirs(path)
    return path


def random_camera(rng, width, height):
    hfov = float(rng.uniform(40.0, 100.0))
    f = ug.hfov_to_focal(hfov, width)
    return ug.CameraModel(width, height, f, f * float(rng.uniform(0.95, 1.05)),
                          (width - 1) / 2.0 + float(rng.uniform(-1, 1)),
                          (height - 1) / 2.0 + float(rng.uniform(-1, 1)))


def random_pose(rng, index):
    axis = rng.normal(size=3)
    tilt = ug.rotation_about_axis(axis, float(rng.uniform(-6, 6)))
    nadir = np.array([[1.0, 0, 0], [0, -1.0, 0], [0, 0, -1.0]])
    center = np.array([(index % 3) * 9.0, (index // 3) * 9.0, 55.0])
    return ug.ViewPose(tilt @ nadir, center + rng.normal(scale=0.8, size=3))


def f32(values):
    return np.asarray(values, dtype=np.float32).astype(np.float64)


def make_scene_fixture(scene_dir, rng, n_views=5, width=14, height=10):
    gt_records, pred_records, manifest_views = [], [], []
    pred_dir = os.path.join(scene_dir, "pred")
    os.makedirs(pred_dir)
    for i in range(n_views):
        image_id = f"v{i:03d}"
        camera = random_camera(rng, width, height)
        pose = random_pose(rng, i)
        gt_depth = f32(50.0 + 7.0 * rng.random((height, width)))
        mask = rng.random((height, width)) > 0.08
        pred_depth = f32(np.clip(gt_depth * (1 + 0.015 * rng.standard_normal(gt_depth.shape)),
                                 0.01, None))
        pred_pose = ug.ViewPose(
            ug.rotation_about_axis(rng.normal(size=3), float(rng.uniform(-2, 2)))
            @ pose.rotation,
            pose.center + rng.normal(scale=0.4, size=3))
        pred_camera = ug.CameraModel(width, height,
                                     camera.fx * float(rng.uniform(0.97, 1.03)),
                                     camera.fy * float(rng.uniform(0.97, 1.03)),
                                     camera.cx, camera.cy)
        ug.write_depth(os.path.join(scene_dir, f"{image_id}.pfm"),
                       np.where(mask, gt_depth, 0.0))
        ug.write_mask(os.path.join(scene_dir, f"{image_id}.pgm"), mask)
        ug.write_depth(os.path.join(pred_dir, f"{image_id}.pfm"), pred_depth)
        gt_records.append((image_id, camera, pose))
        pred_records.append((image_id, pred_camera, pred_pose))
        manifest_views.append(ug.ManifestView(image_id, "gt_cams.txt",
                                              f"{image_id}.pfm", f"{image_id}.pgm"))
    ug.write_cameras(os.path.join(scene_dir, "gt_cams.txt"), gt_records)
    ug.write_cameras(os.path.join(scene_dir, "pred_cams.txt"), pred_records)
    manifest = ug.SceneManifest("fixture", tuple(manifest_views),
                                metadata={"voxel_size": 0.25},
                                base_dir=scene_dir)
    ug.write_manifest(os.path.join(scene_dir, "scene.json"), manifest)

    # expected metrics: in-process evaluation on the data as loaded back
    loaded = ug.read_manifest(os.path.join(scene_dir, "scene.json"))
    gt_views, order = _load_gt_views(loaded, None)
    predictions = {}
    for image_id, camera, pose in ug.read_cameras(os.path.join(scene_dir, "pred_cams.txt")):
        depth = ug.read_depth(os.path.join(pred_dir, f"{image_id}.pfm"))
        predictions[image_id] = ug.ViewPrediction(pose=pose, depth=depth.values,
                                                  camera=camera)
    sample = _build_sample(order, gt_views, predictions, 0.25)
    return ug.evaluate_shared(sample).to_dict()


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--scenes", type=int, default=100)
    parser.add_argument("--solver-cases", type=int, default=25)
    parser.add_argument("--out", default=os.path.join(os.path.dirname(__file__),
                                                      "..", "fixtures"))
    args = parser.parse_args()
    out = fresh_dir(os.path.abspath(args.out))
    expected = {"scenes": [], "umeyama": [], "icp": [], "chamfer": [], "ray_error": []}

    for k in range(args.scenes):
        rng = np.random.default_rng(5000 + k)
        scene_dir = os.path.join(out, f"scene_{k:03d}")
        os.makedirs(scene_dir)
        expected["scenes"].append({
            "dir": f"scene_{k:03d}",
            "metrics": make_scene_fixture(scene_dir, rng),
        })

    solver_dir = os.path.join(out, "solver")
    os.makedirs(solver_dir)
    for k in range(args.solver_cases):
        rng = np.random.default_rng(9000 + k)
        src = rng.normal(scale=10, size=(int(rng.integers(10, 200)), 3))
        g = ug.Sim3Transform(float(rng.uniform(0.3, 3.0)),
                             ug.rotation_about_axis(rng.normal(size=3),
                                                    float(rng.uniform(-90, 90))),
                             rng.normal(scale=8, size=3))
        dst = g.apply(src) + rng.normal(scale=0.05, size=src.shape)
        ug.write_pointcloud(os.path.join(solver_dir, f"um_src_{k}.ply"), src)
        ug.write_pointcloud(os.path.join(solver_dir, f"um_dst_{k}.ply"), dst)
        t = ug.umeyama(src, dst)
        residuals = np.linalg.norm(t.apply(src) - dst, axis=1)
        expected["umeyama"].append({
            "src": f"solver/um_src_{k}.ply", "dst": f"solver/um_dst_{k}.ply",
            "scale": t.scale, "rotation": t.rotation.tolist(),
            "translation": t.translation.tolist(),
            "rms_residual": float(np.sqrt(np.mean(residuals ** 2))),
        })

        cloud = rng.uniform(0, 12, size=(int(rng.integers(100, 400)), 3))
        shift = ug.Sim3Transform(1.0, ug.rotation_about_axis(rng.normal(size=3),
                                                             float(rng.uniform(-5, 5))),
                                 rng.normal(scale=0.2, size=3))
        moved = shift.apply(cloud)
        ug.write_pointcloud(os.path.join(solver_dir, f"icp_src_{k}.ply"), moved)
        ug.write_pointcloud(os.path.join(solver_dir, f"icp_dst_{k}.ply"), cloud)
        result = ug.icp(moved, cloud, params=ug.IcpParams(trim_fraction=0.1))
        expected["icp"].append({
            "src": f"solver/icp_src_{k}.ply", "dst": f"solver/icp_dst_{k}.ply",
            "trim_fraction": 0.1,
            "scale": result.transform.scale,
            "rotation": result.transform.rotation.tolist(),
            "translation": result.transform.translation.tolist(),
            "rms_residual": result.rms_residual,
            "inlier_count": result.inlier_count,
            "iterations_used": result.iterations_used,
        })

        a = rng.uniform(-5, 5, size=(int(rng.integers(1, 300)), 3))
        b = rng.uniform(-5, 5, size=(int(rng.integers(1, 300)), 3))
        ug.write_pointcloud(os.path.join(solver_dir, f"cd_a_{k}.ply"), a)
        ug.write_pointcloud(os.path.join(solver_dir, f"cd_b_{k}.ply"), b)
        r = ug.chamfer_l1(a, b)
        expected["chamfer"].append({
            "a": f"solver/cd_a_{k}.ply", "b": f"solver/cd_b_{k}.ply",
            "one_way_ab": r.one_way_ab, "one_way_ba": r.one_way_ba,
            "symmetric": r.symmetric,
        })

        w, h = int(rng.integers(6, 40)), int(rng.integers(6, 40))
        cam_pred = random_camera(rng, w, h)
        cam_gt = random_camera(rng, w, h)
        expected["ray_error"].append({
            "pred": {"width": w, "height": h, "fx": cam_pred.fx, "fy": cam_pred.fy,
                     "cx": cam_pred.cx, "cy": cam_pred.cy},
            "gt": {"width": w, "height": h, "fx": cam_gt.fx, "fy": cam_gt.fy,
                   "cx": cam_gt.cx, "cy": cam_gt.cy},
            "value": ug.ray_error(cam_pred, cam_gt),
        })

    with open(os.path.join(out, "expected.json"), "w") as f:
        json.dump(expected, f)
    n_scene = len(expected["scenes"])
    n_solver = sum(len(expected[k]) for k in ("umeyama", "icp", "chamfer", "ray_error"))
    print(f"wrote {n_scene} scene fixtures and {n_solver} solver cases to {out}")


if __name__ == "__main__":
    main()
