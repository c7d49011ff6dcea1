/**
 * Minimal float image type plus the sampling machinery the augmentations
 * need: bilinear lookup, homography warps, resizing, and binary
 * PGM/PPM (P5/P6) decoding so small on-disk datasets work without native
 * image libraries.
 */

import { readFileSync } from "node:fs";

export interface Image {
  width: number;
  height: number;
  channels: number;
  /** Row-major, interleaved channels, values in [0, 1]. */
  data: Float32Array;
}

export function createImage(width: number, height: number, channels = 3): Image {
  return { width, height, channels, data: new Float32Array(width * height * channels) };
}

export function cloneImage(img: Image): Image {
  return { ...img, data: new Float32Array(img.data) };
}

export function pixel(img: Image, x: number, y: number, c: number): number {
  return img.data[(y * img.width + x) * img.channels + c];
}

/** Bilinear sample; out-of-frame taps read as `fill`. */
export function sampleBilinear(img: Image, x: number, y: number, c: number, fill = 0): number {
  if (x < -1 || y < -1 || x > img.width || y > img.height) return fill;
  const x0 = Math.floor(x);
  const y0 = Math.floor(y);
  const fx = x - x0;
  const fy = y - y0;
  let acc = 0;
  for (const [dx, dy, w] of [
    [0, 0, (1 - fx) * (1 - fy)],
    [1, 0, fx * (1 - fy)],
    [0, 1, (1 - fx) * fy],
    [1, 1, fx * fy],
  ] as const) {
    const xi = x0 + dx;
    const yi = y0 + dy;
    acc +=
      xi >= 0 && yi >= 0 && xi < img.width && yi < img.height
        ? w * pixel(img, xi, yi, c)
        : w * fill;
  }
  return acc;
}

export type Homography = Float64Array; // 9 entries, row major

/**
 * Solve for the homography mapping each src corner to the matching dst
 * corner (standard 8x8 DLT system, h22 fixed at 1).
 */
export function homographyFromCorners(
  src: Array<[number, number]>,
  dst: Array<[number, number]>,
): Homography {
  if (src.length !== 4 || dst.length !== 4) throw new Error("need exactly 4 corner pairs");
  const a: number[][] = [];
  const b: number[] = [];
  for (let i = 0; i < 4; i++) {
    const [x, y] = src[i];
    const [u, v] = dst[i];
    a.push([x, y, 1, 0, 0, 0, -u * x, -u * y]);
    b.push(u);
    a.push([0, 0, 0, x, y, 1, -v * x, -v * y]);
    b.push(v);
  }
  const h = solveLinear(a, b);
  return Float64Array.from([...h, 1]);
}

function solveLinear(a: number[][], b: number[]): number[] {
  const n = b.length;
  const m = a.map((row, i) => [...row, b[i]]);
  for (let col = 0; col < n; col++) {
    let best = col;
    for (let row = col + 1; row < n; row++) {
      if (Math.abs(m[row][col]) > Math.abs(m[best][col])) best = row;
    }
    if (Math.abs(m[best][col]) < 1e-12) throw new Error("degenerate corner configuration");
    [m[col], m[best]] = [m[best], m[col]];
    for (let row = 0; row < n; row++) {
      if (row === col) continue;
      const f = m[row][col] / m[col][col];
      for (let k = col; k <= n; k++) m[row][k] -= f * m[col][k];
    }
  }
  return m.map((row, i) => row[n] / row[i]);
}

export function applyHomography(h: Homography, x: number, y: number): [number, number] {
  const w = h[6] * x + h[7] * y + h[8];
  return [(h[0] * x + h[1] * y + h[2]) / w, (h[3] * x + h[4] * y + h[5]) / w];
}

/** Inverse-warp: for each output pixel, sample the source at H(x, y). */
export function warpImage(img: Image, h: Homography, fill = 0): Image {
  const out = createImage(img.width, img.height, img.channels);
  for (let y = 0; y < img.height; y++) {
    for (let x = 0; x < img.width; x++) {
      const [sx, sy] = applyHomography(h, x, y);
      for (let c = 0; c < img.channels; c++) {
        out.data[(y * img.width + x) * img.channels + c] = sampleBilinear(img, sx, sy, c, fill);
      }
    }
  }
  return out;
}

export function resizeImage(img: Image, width: number, height: number): Image {
  const out = createImage(width, height, img.channels);
  const sx = img.width / width;
  const sy = img.height / height;
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      for (let c = 0; c < img.channels; c++) {
        out.data[(y * width + x) * img.channels + c] = sampleBilinear(
          img,
          (x + 0.5) * sx - 0.5,
          (y + 0.5) * sy - 0.5,
          c,
        );
      }
    }
  }
  return out;
}

export function cropImage(img: Image, x0: number, y0: number, width: number, height: number): Image {
  const out = createImage(width, height, img.channels);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      for (let c = 0; c < img.channels; c++) {
        const sx = x0 + x;
        const sy = y0 + y;
        out.data[(y * width + x) * img.channels + c] =
          sx >= 0 && sy >= 0 && sx < img.width && sy < img.height ? pixel(img, sx, sy, c) : 0;
      }
    }
  }
  return out;
}

export function hflipImage(img: Image): Image {
  const out = createImage(img.width, img.height, img.channels);
  for (let y = 0; y < img.height; y++) {
    for (let x = 0; x < img.width; x++) {
      for (let c = 0; c < img.channels; c++) {
        out.data[(y * img.width + x) * img.channels + c] = pixel(img, img.width - 1 - x, y, c);
      }
    }
  }
  return out;
}

/** Decode binary PGM (P5) or PPM (P6), 8-bit, into a float image. */
export function decodePnm(path: string): Image {
  const buf = readFileSync(path);
  let pos = 0;
  const token = (): string => {
    while (pos < buf.length) {
      const ch = buf[pos];
      if (ch === 0x23) {
        while (pos < buf.length && buf[pos] !== 0x0a) pos++;
      } else if (ch === 0x20 || ch === 0x09 || ch === 0x0a || ch === 0x0d) {
        pos++;
      } else {
        break;
      }
    }
    const start = pos;
    while (pos < buf.length && ![0x20, 0x09, 0x0a, 0x0d].includes(buf[pos])) pos++;
    return buf.subarray(start, pos).toString("ascii");
  };
  const magic = token();
  if (magic !== "P5" && magic !== "P6") throw new Error(`${path}: unsupported PNM magic ${magic}`);
  const width = parseInt(token(), 10);
  const height = parseInt(token(), 10);
  const maxval = parseInt(token(), 10);
  if (!(width > 0 && height > 0) || maxval <= 0 || maxval > 255) {
    throw new Error(`${path}: bad PNM header`);
  }
  pos++; // single whitespace after maxval
  const channels = magic === "P6" ? 3 : 1;
  const need = width * height * channels;
  if (buf.length - pos < need) throw new Error(`${path}: truncated pixel data`);
  const img = createImage(width, height, 3);
  for (let i = 0; i < width * height; i++) {
    for (let c = 0; c < 3; c++) {
      const value = buf[pos + i * channels + (channels === 3 ? c : 0)];
      img.data[i * 3 + c] = value / maxval;
    }
  }
  return img;
}
