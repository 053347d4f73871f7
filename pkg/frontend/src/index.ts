/**
 * In-process bindings for the uavgeom evaluation core.
 *
 * Each function shape-checks its array inputs, serializes them to the
 * core's file formats in a temp workspace, runs the core CLI, and
 * parses the full-precision JSON result. Every number crosses the
 * boundary bit-exactly (shortest round-trip decimals both ways), so
 * results agree bit-for-bit with in-process core calls on the same data.
 *
 * All functions are pure: no state is kept between calls, and the
 * compute happens in a separate process, so concurrent calls from
 * worker threads are safe.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import {
  BindingError,
  checkImage,
  checkMask,
  checkPoints,
  checkQuaternion,
  checkVector3,
} from "./arrays.js";
import {
  CameraRecord,
  ManifestViewEntry,
  writeCameras,
  writeDepthPfm,
  writeManifest,
  writeMaskPgm,
  writePointcloud,
} from "./formats.js";
import { runCliJson, withTempDir } from "./runner.js";

export { BindingError } from "./arrays.js";
export { CliError } from "./runner.js";
export * as formats from "./formats.js";

export interface Sim3 {
  scale: number;
  /** 3x3 rotation, row-major */
  rotation: number[][];
  translation: number[];
}

export interface AlignmentResult extends Sim3 {
  rms_residual: number;
  inlier_count: number;
  iterations_used: number;
  residual_trace: number[];
}

export interface ChamferResult {
  one_way_ab: number;
  one_way_ba: number;
  symmetric: number;
}

export interface MetricRecord {
  absrel: number;
  ray_error: number;
  chamfer: number;
  ate_shared: number;
  ate_independent: number;
  ate_gap: number;
  rotation_mae: number;
  ate_shared_rmse: number;
  ate_independent_rmse: number;
  alignment: Sim3;
  per_view: Array<{
    image_id: string;
    valid_pixels: number;
    center_error: number;
    rotation_error: number;
    absrel: number | null;
    ray_error: number | null;
  }>;
}

export interface CameraIntrinsics {
  width: number;
  height: number;
  fx: number;
  fy: number;
  cx: number;
  cy: number;
}

/**
 * One view of an evaluation bundle. The pose is world-from-camera,
 * given as the file-boundary representation: quaternion (w,x,y,z) plus
 * camera center. Depth is per-pixel camera-frame z in meters, row-major
 * (H,W); 0 marks invalid. The dense point map is derived by the core
 * from depth, intrinsics, and pose, exactly as its own loaders do.
 */
export interface ViewBundle {
  camera: CameraIntrinsics;
  quatWxyz: Float64Array;
  center: Float64Array;
  depth: Float64Array;
  /** optional validity mask (nonzero = valid); defaults to depth > 0 */
  mask?: Uint8Array;
}

export interface EvaluateOptions {
  voxelSize?: number;
  trimFraction?: number;
  stride?: number;
}

export interface IcpOptions {
  mode?: "sim3" | "se3";
  maxIterations?: number;
  convergenceRelTol?: number;
  trimFraction?: number;
  maxCorrespondenceDist?: number;
}

function checkView(v: ViewBundle, name: string): void {
  checkQuaternion(v.quatWxyz, `${name}.quatWxyz`);
  checkVector3(v.center, `${name}.center`);
  checkImage(v.depth, v.camera.width, v.camera.height, `${name}.depth`);
  if (v.mask !== undefined) {
    checkMask(v.mask, v.camera.width, v.camera.height, `${name}.mask`);
  }
}

function cameraRecord(imageId: string, v: ViewBundle): CameraRecord {
  return { imageId, ...v.camera, quatWxyz: v.quatWxyz, center: v.center };
}

/**
 * Score a multi-view prediction against ground truth under one shared
 * scene-level similarity alignment. Ground-truth and predicted views
 * pair up by index and must share image sizes per view.
 */
export function evaluateShared(
  pred: ViewBundle[],
  gt: ViewBundle[],
  options: EvaluateOptions = {},
): MetricRecord {
  if (pred.length !== gt.length) {
    throw new BindingError(
      `view counts differ: pred has ${pred.length}, gt has ${gt.length}`,
    );
  }
  if (gt.length === 0) {
    throw new BindingError("empty view bundles");
  }
  gt.forEach((v, i) => checkView(v, `gt[${i}]`));
  pred.forEach((v, i) => {
    checkView(v, `pred[${i}]`);
    if (
      v.camera.width !== gt[i].camera.width ||
      v.camera.height !== gt[i].camera.height
    ) {
      throw new BindingError(
        `pred[${i}] image size ${v.camera.width}x${v.camera.height} does not match ` +
          `gt[${i}] ${gt[i].camera.width}x${gt[i].camera.height}`,
      );
    }
  });

  return withTempDir((dir) => {
    const predDepthDir = path.join(dir, "pred");
    fs.mkdirSync(predDepthDir);
    const views: ManifestViewEntry[] = [];
    const gtRecords: CameraRecord[] = [];
    const predRecords: CameraRecord[] = [];
    gt.forEach((v, i) => {
      const id = `v${String(i).padStart(3, "0")}`;
      const { width, height } = v.camera;
      writeDepthPfm(path.join(dir, `${id}.pfm`), v.depth, width, height);
      const mask = v.mask ?? Uint8Array.from(v.depth, (d) => (d > 0 ? 1 : 0));
      writeMaskPgm(path.join(dir, `${id}.pgm`), mask, width, height);
      writeDepthPfm(path.join(predDepthDir, `${id}.pfm`), pred[i].depth, width, height);
      gtRecords.push(cameraRecord(id, v));
      predRecords.push(cameraRecord(id, pred[i]));
      views.push({
        image_id: id,
        camera_file: "gt_cams.txt",
        depth_file: `${id}.pfm`,
        mask_file: `${id}.pgm`,
        split: "test",
        acquisition: "nadir",
      });
    });
    writeCameras(path.join(dir, "gt_cams.txt"), gtRecords);
    writeCameras(path.join(dir, "pred_cams.txt"), predRecords);
    const metadata: Record<string, unknown> = {};
    if (options.voxelSize !== undefined) metadata.voxel_size = options.voxelSize;
    writeManifest(path.join(dir, "scene.json"), "bound-scene", views, metadata);

    const report = path.join(dir, "report.json");
    const args = [
      "eval",
      "--manifest",
      path.join(dir, "scene.json"),
      "--pred-cameras",
      path.join(dir, "pred_cams.txt"),
      "--pred-depth-dir",
      predDepthDir,
      "--single",
      "--json-out",
      report,
    ];
    if (options.trimFraction !== undefined) {
      args.push("--trim", options.trimFraction.toString());
    }
    if (options.stride !== undefined) {
      args.push("--stride", options.stride.toString());
    }
    return runCliJson<MetricRecord>(args, report);
  });
}

/** Least-squares similarity (or rigid) transform between corresponded clouds. */
export function umeyama(
  src: Float64Array,
  dst: Float64Array,
  withScale = true,
): AlignmentResult {
  const n = checkPoints(src, "src");
  const m = checkPoints(dst, "dst");
  if (n !== m) {
    throw new BindingError(`point counts differ: src has ${n}, dst has ${m}`);
  }
  if (n === 0) {
    throw new BindingError("src is empty");
  }
  return withTempDir((dir) => {
    writePointcloud(path.join(dir, "src.ply"), src);
    writePointcloud(path.join(dir, "dst.ply"), dst);
    const out = path.join(dir, "result.json");
    return runCliJson<AlignmentResult>(
      [
        "align",
        "--src", path.join(dir, "src.ply"),
        "--dst", path.join(dir, "dst.ply"),
        "--method", "umeyama",
        "--mode", withScale ? "sim3" : "se3",
        "--json-out", out,
      ],
      out,
    );
  });
}

/** Trimmed iterative closest point from src onto dst (identity init). */
export function icp(
  src: Float64Array,
  dst: Float64Array,
  options: IcpOptions = {},
): AlignmentResult {
  if (checkPoints(src, "src") === 0 || checkPoints(dst, "dst") === 0) {
    throw new BindingError("icp requires non-empty clouds");
  }
  return withTempDir((dir) => {
    writePointcloud(path.join(dir, "src.ply"), src);
    writePointcloud(path.join(dir, "dst.ply"), dst);
    const out = path.join(dir, "result.json");
    const args = [
      "align",
      "--src", path.join(dir, "src.ply"),
      "--dst", path.join(dir, "dst.ply"),
      "--method", "icp",
      "--mode", options.mode ?? "sim3",
      "--json-out", out,
    ];
    if (options.maxIterations !== undefined) {
      args.push("--max-iter", options.maxIterations.toString());
    }
    if (options.convergenceRelTol !== undefined) {
      args.push("--tol", options.convergenceRelTol.toString());
    }
    if (options.trimFraction !== undefined) {
      args.push("--trim", options.trimFraction.toString());
    }
    if (options.maxCorrespondenceDist !== undefined) {
      args.push("--max-corr", options.maxCorrespondenceDist.toString());
    }
    return runCliJson<AlignmentResult>(args, out);
  });
}

/** One-way and symmetric Chamfer-L1 between two clouds. */
export function chamferL1(a: Float64Array, b: Float64Array): ChamferResult {
  if (checkPoints(a, "a") === 0 || checkPoints(b, "b") === 0) {
    throw new BindingError("chamfer requires non-empty clouds");
  }
  return withTempDir((dir) => {
    writePointcloud(path.join(dir, "a.ply"), a);
    writePointcloud(path.join(dir, "b.ply"), b);
    const out = path.join(dir, "result.json");
    return runCliJson<ChamferResult>(
      [
        "eval",
        "--chamfer-pair", path.join(dir, "a.ply"), path.join(dir, "b.ply"),
        "--json-out", out,
      ],
      out,
    );
  });
}

/**
 * Mean angle in degrees between the per-pixel camera rays of two
 * intrinsics sets (camera-frame; pose-independent), over all pixels.
 */
export function rayError(pred: CameraIntrinsics, gt: CameraIntrinsics): number {
  if (pred.width !== gt.width || pred.height !== gt.height) {
    throw new BindingError(
      `image sizes differ: ${pred.width}x${pred.height} vs ${gt.width}x${gt.height}`,
    );
  }
  const identity = {
    quatWxyz: Float64Array.from([1, 0, 0, 0]),
    center: new Float64Array(3),
  };
  return withTempDir((dir) => {
    writeCameras(path.join(dir, "pred.txt"), [
      { imageId: "v", ...pred, ...identity },
    ]);
    writeCameras(path.join(dir, "gt.txt"), [{ imageId: "v", ...gt, ...identity }]);
    const out = path.join(dir, "result.json");
    const result = runCliJson<{ ray_error: number }>(
      [
        "eval",
        "--ray-pair", path.join(dir, "pred.txt"), path.join(dir, "gt.txt"),
        "--json-out", out,
      ],
      out,
    );
    return result.ray_error;
  });
}
