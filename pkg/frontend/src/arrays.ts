/**
 * Shape-checked views over contiguous row-major Float64Array buffers.
 *
 * Every binding input crosses this boundary: a wrong length or a
 * non-finite value is reported with the offending dimension before any
 * file is written or any process spawned.
 */

export class BindingError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "BindingError";
  }
}

function checkFinite(data: Float64Array, name: string): void {
  for (let i = 0; i < data.length; i++) {
    if (!Number.isFinite(data[i])) {
      throw new BindingError(`${name}[${i}] is not finite`);
    }
  }
}

/** (N,3) point buffer; returns N. */
export function checkPoints(data: Float64Array, name: string): number {
  if (data.length % 3 !== 0) {
    throw new BindingError(
      `${name} must have length divisible by 3 (N x 3 points), got ${data.length}`,
    );
  }
  checkFinite(data, name);
  return data.length / 3;
}

/** (H,W) per-pixel buffer against a declared image size. */
export function checkImage(
  data: Float64Array,
  width: number,
  height: number,
  name: string,
): void {
  if (!Number.isInteger(width) || !Number.isInteger(height) || width < 1 || height < 1) {
    throw new BindingError(`${name}: invalid image size ${width}x${height}`);
  }
  if (data.length !== width * height) {
    throw new BindingError(
      `${name} must have length ${width * height} (${height}x${width}), got ${data.length}`,
    );
  }
  checkFinite(data, name);
}

/** (H,W) mask; any nonzero byte is valid. */
export function checkMask(
  data: Uint8Array,
  width: number,
  height: number,
  name: string,
): void {
  if (data.length !== width * height) {
    throw new BindingError(
      `${name} must have length ${width * height} (${height}x${width}), got ${data.length}`,
    );
  }
}

/** (4,) quaternion (w,x,y,z); normalization is validated by the core. */
export function checkQuaternion(data: Float64Array, name: string): void {
  if (data.length !== 4) {
    throw new BindingError(`${name} must have length 4 (w,x,y,z), got ${data.length}`);
  }
  checkFinite(data, name);
}

/** (3,) vector. */
export function checkVector3(data: Float64Array, name: string): void {
  if (data.length !== 3) {
    throw new BindingError(`${name} must have length 3, got ${data.length}`);
  }
  checkFinite(data, name);
}
