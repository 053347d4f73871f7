/**
 * Cross-path equivalence: every bound function must agree bit-for-bit
 * with the core on fixture inputs the core evaluated in-process.
 *
 * Fixtures are generated by scripts/generate_fixtures.py (which uses the
 * core library directly); run it before `npm test`.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

import { beforeAll, describe, expect, it } from "vitest";

import {
  BindingError,
  CameraIntrinsics,
  MetricRecord,
  ViewBundle,
  chamferL1,
  evaluateShared,
  icp,
  rayError,
  umeyama,
} from "../src/index.js";
import { readCameras, readDepthPfm, readMaskPgm, readPointcloud } from "../src/formats.js";

const FIXTURES = path.join(path.dirname(fileURLToPath(import.meta.url)), "..", "fixtures");

interface ExpectedFile {
  scenes: Array<{ dir: string; metrics: MetricRecord }>;
  umeyama: Array<{
    src: string; dst: string; scale: number; rotation: number[][];
    translation: number[]; rms_residual: number;
  }>;
  icp: Array<{
    src: string; dst: string; trim_fraction: number; scale: number;
    rotation: number[][]; translation: number[]; rms_residual: number;
    inlier_count: number; iterations_used: number;
  }>;
  chamfer: Array<{
    a: string; b: string; one_way_ab: number; one_way_ba: number; symmetric: number;
  }>;
  ray_error: Array<{ pred: CameraIntrinsics; gt: CameraIntrinsics; value: number }>;
}

let expected: ExpectedFile;

beforeAll(() => {
  const manifest = path.join(FIXTURES, "expected.json");
  if (!fs.existsSync(manifest)) {
    throw new Error(
      `fixtures missing at ${FIXTURES}; run: python3 scripts/generate_fixtures.py`,
    );
  }
  expected = JSON.parse(fs.readFileSync(manifest, "utf8"));
});

function loadSceneBundles(dir: string): { pred: ViewBundle[]; gt: ViewBundle[] } {
  const gtCams = readCameras(path.join(dir, "gt_cams.txt"));
  const predCams = readCameras(path.join(dir, "pred_cams.txt"));
  const pred: ViewBundle[] = [];
  const gt: ViewBundle[] = [];
  gtCams.forEach((rec, i) => {
    const depth = readDepthPfm(path.join(dir, `${rec.imageId}.pfm`));
    const mask = readMaskPgm(path.join(dir, `${rec.imageId}.pgm`));
    const predDepth = readDepthPfm(path.join(dir, "pred", `${rec.imageId}.pfm`));
    const intrinsics = (r: typeof rec): CameraIntrinsics => ({
      width: r.width, height: r.height, fx: r.fx, fy: r.fy, cx: r.cx, cy: r.cy,
    });
    gt.push({
      camera: intrinsics(rec),
      quatWxyz: rec.quatWxyz,
      center: rec.center,
      depth: depth.values,
      mask: mask.mask,
    });
    const p = predCams[i];
    pred.push({
      camera: intrinsics(p),
      quatWxyz: p.quatWxyz,
      center: p.center,
      depth: predDepth.values,
    });
  });
  return { pred, gt };
}

describe("evaluateShared cross-path equivalence", () => {
  it("matches the core bit-for-bit on every fixture scene", () => {
    for (const scene of expected.scenes) {
      const { pred, gt } = loadSceneBundles(path.join(FIXTURES, scene.dir));
      const record = evaluateShared(pred, gt, { voxelSize: 0.25 });
      const want = scene.metrics;
      expect(record.absrel).toBe(want.absrel);
      expect(record.ray_error).toBe(want.ray_error);
      expect(record.chamfer).toBe(want.chamfer);
      expect(record.ate_shared).toBe(want.ate_shared);
      expect(record.ate_independent).toBe(want.ate_independent);
      expect(record.ate_gap).toBe(want.ate_gap);
      expect(record.rotation_mae).toBe(want.rotation_mae);
      expect(record.alignment.scale).toBe(want.alignment.scale);
      expect(record.alignment.rotation).toEqual(want.alignment.rotation);
      expect(record.alignment.translation).toEqual(want.alignment.translation);
      expect(record.per_view.length).toBe(want.per_view.length);
    }
  }, 600_000);

  it("returns an all-zero record for identical bundles", () => {
    const { gt } = loadSceneBundles(path.join(FIXTURES, expected.scenes[0].dir));
    const record = evaluateShared(gt, gt, { voxelSize: 0.25 });
    expect(Math.abs(record.absrel)).toBeLessThan(1e-12);
    expect(Math.abs(record.ray_error)).toBeLessThan(1e-12);
    expect(Math.abs(record.chamfer)).toBeLessThan(1e-9);
    expect(Math.abs(record.ate_shared)).toBeLessThan(1e-9);
    expect(Math.abs(record.rotation_mae)).toBeLessThan(1e-9);
  }, 60_000);

  it("rejects mismatched view counts and shapes at the boundary", () => {
    const { pred, gt } = loadSceneBundles(path.join(FIXTURES, expected.scenes[0].dir));
    expect(() => evaluateShared(pred.slice(1), gt)).toThrow(BindingError);
    const bad = { ...pred[0], depth: pred[0].depth.slice(0, 5) };
    expect(() => evaluateShared([bad, ...pred.slice(1)], gt)).toThrow(BindingError);
  });
});

describe("umeyama cross-path equivalence", () => {
  it("matches the core bit-for-bit on every case", () => {
    for (const c of expected.umeyama) {
      const src = readPointcloud(path.join(FIXTURES, c.src));
      const dst = readPointcloud(path.join(FIXTURES, c.dst));
      const result = umeyama(src, dst);
      expect(result.scale).toBe(c.scale);
      expect(result.rotation).toEqual(c.rotation);
      expect(result.translation).toEqual(c.translation);
      expect(result.rms_residual).toBe(c.rms_residual);
    }
  }, 120_000);

  it("src = dst gives the identity", () => {
    const src = readPointcloud(path.join(FIXTURES, expected.umeyama[0].src));
    const result = umeyama(src, src);
    expect(result.scale).toBeCloseTo(1.0, 12);
    expect(result.rms_residual).toBeLessThan(1e-12);
  }, 60_000);

  it("rejects empty and mismatched arrays at the boundary", () => {
    expect(() => umeyama(new Float64Array(0), new Float64Array(0))).toThrow(BindingError);
    expect(() => umeyama(new Float64Array(9), new Float64Array(6))).toThrow(BindingError);
    expect(() => umeyama(new Float64Array(10), new Float64Array(10))).toThrow(BindingError);
  });
});

describe("icp cross-path equivalence", () => {
  it("matches the core bit-for-bit on every case", () => {
    for (const c of expected.icp) {
      const src = readPointcloud(path.join(FIXTURES, c.src));
      const dst = readPointcloud(path.join(FIXTURES, c.dst));
      const result = icp(src, dst, { trimFraction: c.trim_fraction });
      expect(result.scale).toBe(c.scale);
      expect(result.rotation).toEqual(c.rotation);
      expect(result.translation).toEqual(c.translation);
      expect(result.rms_residual).toBe(c.rms_residual);
      expect(result.inlier_count).toBe(c.inlier_count);
      expect(result.iterations_used).toBe(c.iterations_used);
    }
  }, 120_000);
});

describe("chamferL1 cross-path equivalence", () => {
  it("matches the core bit-for-bit on every case", () => {
    for (const c of expected.chamfer) {
      const a = readPointcloud(path.join(FIXTURES, c.a));
      const b = readPointcloud(path.join(FIXTURES, c.b));
      const result = chamferL1(a, b);
      expect(result.one_way_ab).toBe(c.one_way_ab);
      expect(result.one_way_ba).toBe(c.one_way_ba);
      expect(result.symmetric).toBe(c.symmetric);
    }
  }, 120_000);

  it("reproduces the hand-computed example", () => {
    const a = Float64Array.from([0, 0, 0]);
    const b = Float64Array.from([1, 1, 0]);
    const result = chamferL1(a, b);
    expect(result.symmetric).toBe(2.0);
  }, 60_000);
});

describe("rayError cross-path equivalence", () => {
  it("matches the core bit-for-bit on every case", () => {
    for (const c of expected.ray_error) {
      expect(rayError(c.pred, c.gt)).toBe(c.value);
    }
  }, 120_000);

  it("identical intrinsics give zero", () => {
    const cam = expected.ray_error[0].gt;
    expect(rayError(cam, cam)).toBe(0);
  }, 60_000);

  it("rejects mismatched image sizes", () => {
    const cam = expected.ray_error[0].gt;
    expect(() => rayError(cam, { ...cam, width: cam.width + 1 })).toThrow(BindingError);
  });
});
