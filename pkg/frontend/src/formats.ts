/**
 * Readers/writers for the core toolkit's on-disk formats.
 *
 * Values are serialized with JavaScript's shortest round-trip decimal
 * representation; the Python side parses correctly rounded, so every
 * float64 crosses the boundary bit-exactly. Poses stay in the file
 * format's own representation (quaternion w,x,y,z plus camera center):
 * converting to rotation matrices and back is not stable in the last
 * digit and would break bit-for-bit equivalence with the core.
 */

import * as fs from "node:fs";

export interface CameraRecord {
  imageId: string;
  width: number;
  height: number;
  fx: number;
  fy: number;
  cx: number;
  cy: number;
  /** world-from-camera rotation, (w,x,y,z) */
  quatWxyz: Float64Array;
  /** camera center in the world frame */
  center: Float64Array;
}

function fmt(x: number): string {
  return Object.is(x, -0) ? "0" : x.toString();
}

export function writeCameras(path: string, records: CameraRecord[]): void {
  const lines = records.map((r) => {
    const q = r.quatWxyz;
    const c = r.center;
    return [
      r.imageId,
      r.width.toString(),
      r.height.toString(),
      fmt(r.fx),
      fmt(r.fy),
      fmt(r.cx),
      fmt(r.cy),
      fmt(q[0]),
      fmt(q[1]),
      fmt(q[2]),
      fmt(q[3]),
      fmt(c[0]),
      fmt(c[1]),
      fmt(c[2]),
    ].join(" ");
  });
  fs.writeFileSync(path, lines.length ? lines.join("\n") + "\n" : "");
}

export function readCameras(path: string): CameraRecord[] {
  const records: CameraRecord[] = [];
  for (const line of fs.readFileSync(path, "utf8").split("\n")) {
    const trimmed = line.trim();
    if (!trimmed) continue;
    const tok = trimmed.split(/\s+/);
    if (tok.length !== 14) {
      throw new Error(`${path}: expected 14 fields, got ${tok.length}`);
    }
    records.push({
      imageId: tok[0],
      width: parseInt(tok[1], 10),
      height: parseInt(tok[2], 10),
      fx: Number(tok[3]),
      fy: Number(tok[4]),
      cx: Number(tok[5]),
      cy: Number(tok[6]),
      quatWxyz: Float64Array.from(tok.slice(7, 11), Number),
      center: Float64Array.from(tok.slice(11, 14), Number),
    });
  }
  return records;
}

/** Binary little-endian PLY with double x,y,z (the core's own cloud layout). */
export function writePointcloud(path: string, points: Float64Array): void {
  const n = points.length / 3;
  const header =
    "ply\nformat binary_little_endian 1.0\n" +
    `element vertex ${n}\n` +
    "property double x\nproperty double y\nproperty double z\n" +
    "end_header\n";
  const payload = Buffer.alloc(points.length * 8);
  for (let i = 0; i < points.length; i++) {
    payload.writeDoubleLE(points[i], i * 8);
  }
  fs.writeFileSync(path, Buffer.concat([Buffer.from(header, "ascii"), payload]));
}

export function readPointcloud(path: string): Float64Array {
  const raw = fs.readFileSync(path);
  const end = raw.indexOf("end_header\n");
  if (end < 0) throw new Error(`${path}: not a PLY file`);
  const header = raw.subarray(0, end).toString("ascii");
  const match = header.match(/element vertex (\d+)/);
  if (!match) throw new Error(`${path}: no vertex element`);
  const n = parseInt(match[1], 10);
  const doubles = header.includes("property double x");
  const floats = header.includes("property float x");
  if (!doubles && !floats) throw new Error(`${path}: unsupported vertex layout`);
  const body = raw.subarray(end + "end_header\n".length);
  const out = new Float64Array(n * 3);
  const view = new DataView(body.buffer, body.byteOffset, body.byteLength);
  const stride = doubles ? 8 : 4;
  for (let i = 0; i < n * 3; i++) {
    out[i] = doubles ? view.getFloat64(i * stride, true) : view.getFloat32(i * stride, true);
  }
  return out;
}

/** Grayscale little-endian PFM, rows stored bottom-up, invalid pixels = 0. */
export function writeDepthPfm(
  path: string,
  values: Float64Array,
  width: number,
  height: number,
): void {
  const header = `Pf\n${width} ${height}\n-1.0\n`;
  const payload = Buffer.alloc(width * height * 4);
  for (let row = 0; row < height; row++) {
    const src = (height - 1 - row) * width; // bottom row first
    for (let col = 0; col < width; col++) {
      payload.writeFloatLE(Math.fround(values[src + col]), (row * width + col) * 4);
    }
  }
  fs.writeFileSync(path, Buffer.concat([Buffer.from(header, "ascii"), payload]));
}

export function readDepthPfm(
  path: string,
): { values: Float64Array; width: number; height: number } {
  const raw = fs.readFileSync(path);
  let offset = 0;
  const readLine = () => {
    const nl = raw.indexOf(0x0a, offset);
    const line = raw.subarray(offset, nl).toString("ascii");
    offset = nl + 1;
    return line;
  };
  if (readLine() !== "Pf") throw new Error(`${path}: not a grayscale PFM`);
  const [w, h] = readLine().split(/\s+/).map((t) => parseInt(t, 10));
  if (Number(readLine()) >= 0) throw new Error(`${path}: big-endian PFM unsupported`);
  const values = new Float64Array(w * h);
  for (let row = 0; row < h; row++) {
    const dst = (h - 1 - row) * w;
    for (let col = 0; col < w; col++) {
      values[dst + col] = raw.readFloatLE(offset + (row * w + col) * 4);
    }
  }
  return { values, width: w, height: h };
}

/** Binary PGM (P5): 255 = valid, 0 = invalid. */
export function writeMaskPgm(
  path: string,
  mask: Uint8Array,
  width: number,
  height: number,
): void {
  const header = `P5\n${width} ${height}\n255\n`;
  const payload = Buffer.alloc(width * height);
  for (let i = 0; i < mask.length; i++) payload[i] = mask[i] ? 255 : 0;
  fs.writeFileSync(path, Buffer.concat([Buffer.from(header, "ascii"), payload]));
}

export function readMaskPgm(
  path: string,
): { mask: Uint8Array; width: number; height: number } {
  const raw = fs.readFileSync(path);
  if (raw.subarray(0, 2).toString("ascii") !== "P5") {
    throw new Error(`${path}: not a binary PGM`);
  }
  let offset = 2;
  const tokens: number[] = [];
  while (tokens.length < 3) {
    while (offset < raw.length && /\s/.test(String.fromCharCode(raw[offset]))) offset++;
    if (raw[offset] === 0x23) {
      // '#' comment
      while (offset < raw.length && raw[offset] !== 0x0a) offset++;
      continue;
    }
    let tok = "";
    while (offset < raw.length && !/\s/.test(String.fromCharCode(raw[offset]))) {
      tok += String.fromCharCode(raw[offset]);
      offset++;
    }
    tokens.push(parseInt(tok, 10));
  }
  offset++; // single whitespace after maxval
  const [w, h] = [tokens[0], tokens[1]];
  const mask = new Uint8Array(w * h);
  for (let i = 0; i < w * h; i++) mask[i] = raw[offset + i] !== 0 ? 1 : 0;
  return { mask, width: w, height: h };
}

export interface ManifestViewEntry {
  image_id: string;
  camera_file: string;
  depth_file: string;
  mask_file: string;
  split: string;
  acquisition: string;
}

export function writeManifest(
  path: string,
  sceneId: string,
  views: ManifestViewEntry[],
  metadata: Record<string, unknown>,
): void {
  const doc = {
    schema_version: 1,
    scene_id: sceneId,
    views,
    gt_cloud: null,
    metadata,
  };
  fs.writeFileSync(path, JSON.stringify(doc, null, 2) + "\n");
}
