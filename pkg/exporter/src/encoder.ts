/**
 * Encoder abstraction and the deterministic mock backend.
 *
 * The mock encoder resizes an image to a fixed patch, average-pools it to
 * a coarse code (augmentation robustness comes from this low-pass stage,
 * the way real encoders are insensitive to small geometric jitter),
 * projects the code through a seeded Gaussian matrix and L2-normalizes.
 * The map from pixels to features is linear up to the final
 * normalization, so its input gradients are exact and projected-gradient
 * attacks against it are real attacks, not simulations. Real model
 * backends plug in behind the same interface; they need downloaded
 * weights and are out of scope for the hermetic test suite.
 */

import { Image, resizeImage } from "./image.js";
import { Rng, hashLabel } from "./rng.js";

export interface TextEncoder {
  readonly dim: number;
  encodeText(prompt: string): Float64Array;
}

export interface ImageEncoder {
  readonly dim: number;
  encodeImage(img: Image): Float64Array;
}

/** Image encoder that also exposes exact input gradients of the cosine scores. */
export interface DifferentiableImageEncoder extends ImageEncoder {
  readonly patchSize: number;
  /** d(feature . direction)/d(patch pixels), flattened row-major RGB. */
  scoreGradient(img: Image, direction: Float64Array): Float64Array;
}

export function l2normalize(v: Float64Array): Float64Array {
  let norm = 0;
  for (const x of v) norm += x * x;
  norm = Math.sqrt(norm);
  if (norm < 1e-12) throw new Error("zero-norm feature");
  return v.map((x) => x / norm);
}

export function dot(a: Float64Array, b: Float64Array): number {
  let acc = 0;
  for (let i = 0; i < a.length; i++) acc += a[i] * b[i];
  return acc;
}

// Class canvases use frequencies strictly below this cutoff; the encoder
// itself sees a wider band (its own basis cutoff), so attack energy in the
// upper band has nothing to hide behind.
const CANVAS_BASIS_SIZE = 3;

/**
 * Orthonormal 2-D DCT-II patterns over an s x s grid for frequencies
 * (u, v) below `cutoff`, the constant (0, 0) pattern excluded.
 */
function dctBasis(s: number, cutoff: number): Float64Array[] {
  const axis = (u: number, x: number): number =>
    u === 0 ? Math.sqrt(1 / s) : Math.sqrt(2 / s) * Math.cos((Math.PI * u * (x + 0.5)) / s);
  const patterns: Float64Array[] = [];
  for (let u = 0; u < Math.min(cutoff, s); u++) {
    for (let v = 0; v < Math.min(cutoff, s); v++) {
      if (u === 0 && v === 0) continue;
      const pattern = new Float64Array(s * s);
      for (let y = 0; y < s; y++) {
        for (let x = 0; x < s; x++) pattern[y * s + x] = axis(u, x) * axis(v, y);
      }
      patterns.push(pattern);
    }
  }
  return patterns;
}

export class MockClipEncoder implements DifferentiableImageEncoder, TextEncoder {
  readonly dim: number;
  readonly patchSize: number;
  readonly codeSize: number;
  private readonly pool: number; // pooling factor patchSize / codeSize
  private readonly codeDim: number;
  private readonly projection: Float64Array; // dim x codeDim, row major
  private readonly seed: number;

  constructor(dim = 64, patchSize = 32, seed = 0, codeSize = 8, basisSize = 6) {
    if (patchSize % codeSize !== 0) throw new Error("patchSize must be a multiple of codeSize");
    this.dim = dim;
    this.patchSize = patchSize;
    this.codeSize = codeSize;
    this.pool = patchSize / codeSize;
    this.codeDim = codeSize * codeSize * 3;
    this.seed = seed;
    // Projection rows live in the span of low-frequency DCT patterns over
    // the code grid (DC excluded, so brightness offsets are invisible).
    // Sensitivity only to coarse structure is what makes features stable
    // under the geometric augmentations.
    const basis = dctBasis(codeSize, basisSize);
    const basisDim = 3 * basis.length;
    if (basisDim < dim) throw new Error(`basis too small: ${basisDim} < dim ${dim}`);
    const rng = new Rng(seed, "mock-projection");
    const scale = 1 / Math.sqrt(basisDim);
    this.projection = new Float64Array(dim * this.codeDim);
    for (let r = 0; r < dim; r++) {
      for (let ch = 0; ch < 3; ch++) {
        for (const pattern of basis) {
          const weight = rng.gauss() * scale;
          for (let cell = 0; cell < codeSize * codeSize; cell++) {
            this.projection[r * this.codeDim + cell * 3 + ch] += weight * pattern[cell];
          }
        }
      }
    }
  }

  private toPatch(img: Image): Image {
    return img.width === this.patchSize && img.height === this.patchSize
      ? img
      : resizeImage(img, this.patchSize, this.patchSize);
  }

  /** Average-pool the patch down to the code grid. */
  private poolCode(patch: Image): Float64Array {
    const code = new Float64Array(this.codeDim);
    const p = this.pool;
    for (let cy = 0; cy < this.codeSize; cy++) {
      for (let cx = 0; cx < this.codeSize; cx++) {
        for (let ch = 0; ch < 3; ch++) {
          let acc = 0;
          for (let dy = 0; dy < p; dy++) {
            for (let dx = 0; dx < p; dx++) {
              acc += patch.data[((cy * p + dy) * this.patchSize + (cx * p + dx)) * 3 + ch];
            }
          }
          code[(cy * this.codeSize + cx) * 3 + ch] = acc / (p * p);
        }
      }
    }
    return code;
  }

  private project(code: Float64Array): Float64Array {
    const out = new Float64Array(this.dim);
    for (let r = 0; r < this.dim; r++) {
      let acc = 0;
      const base = r * this.codeDim;
      for (let c = 0; c < this.codeDim; c++) acc += this.projection[base + c] * code[c];
      out[r] = acc;
    }
    return out;
  }

  encodeImage(img: Image): Float64Array {
    return l2normalize(this.project(this.poolCode(this.toPatch(img))));
  }

  /**
   * Procedural class canvas for a prompt: a mid-gray patch whose contrast
   * pattern combines only the lowest spatial frequencies. Low-frequency
   * content survives the geometric augmentations, which is what gives the
   * class signal its warp robustness (attack perturbations are free to
   * use the encoder's full band and are much more fragile).
   */
  classCanvas(prompt: string, contrast = 0.5): Image {
    const rng = new Rng(this.seed, `mock-canvas:${hashLabel(prompt)}`);
    const lowBasis = dctBasis(this.codeSize, CANVAS_BASIS_SIZE);
    const code = new Float64Array(this.codeDim);
    for (let ch = 0; ch < 3; ch++) {
      for (const pattern of lowBasis) {
        const weight = rng.gauss();
        for (let cell = 0; cell < this.codeSize * this.codeSize; cell++) {
          code[cell * 3 + ch] += weight * pattern[cell];
        }
      }
    }
    return this.codeToPatch(code, contrast);
  }

  /** Text features are the encodings of the prompt's class canvas. */
  encodeText(prompt: string): Float64Array {
    return this.encodeImage(this.classCanvas(prompt));
  }

  /**
   * Pseudo-inverse-ish preimage: a mid-gray patch whose contrast pattern
   * encodes close to `feature`. Lower contrast weakens the projection
   * norm, which makes the patch easier to attack within a small pixel
   * budget without changing its clean classification.
   */
  patchForFeature(feature: Float64Array, contrast = 0.5): Image {
    const code = new Float64Array(this.codeDim);
    for (let c = 0; c < this.codeDim; c++) {
      let acc = 0;
      for (let r = 0; r < this.dim; r++) acc += this.projection[r * this.codeDim + c] * feature[r];
      code[c] = acc;
    }
    return this.codeToPatch(code, contrast);
  }

  /** Upsample a code pattern to a mid-gray patch at the given contrast. */
  private codeToPatch(code: Float64Array, contrast: number): Image {
    let max = 1e-9;
    for (const v of code) max = Math.max(max, Math.abs(v));
    const img = {
      width: this.patchSize,
      height: this.patchSize,
      channels: 3,
      data: new Float32Array(this.patchSize * this.patchSize * 3),
    };
    const p = this.pool;
    for (let y = 0; y < this.patchSize; y++) {
      for (let x = 0; x < this.patchSize; x++) {
        const cell = (Math.floor(y / p) * this.codeSize + Math.floor(x / p)) * 3;
        for (let ch = 0; ch < 3; ch++) {
          img.data[(y * this.patchSize + x) * 3 + ch] = 0.5 + contrast * (code[cell + ch] / max);
        }
      }
    }
    return img;
  }

  scoreGradient(img: Image, direction: Float64Array): Float64Array {
    // f = Wc/|Wc| with c the pooled code; d(f.t)/dc = W^T (t - (f.t) f) / |Wc|,
    // and each pixel contributes 1/pool^2 of its cell's code gradient.
    const patch = this.toPatch(img);
    const raw = this.project(this.poolCode(patch));
    let norm = 0;
    for (const v of raw) norm += v * v;
    norm = Math.sqrt(norm);
    if (norm < 1e-12) throw new Error("zero-norm projection");
    const f = raw.map((v) => v / norm);
    const coeff = dot(f, direction);
    const residual = new Float64Array(this.dim);
    for (let r = 0; r < this.dim; r++) residual[r] = (direction[r] - coeff * f[r]) / norm;
    const codeGrad = new Float64Array(this.codeDim);
    for (let r = 0; r < this.dim; r++) {
      const w = residual[r];
      if (w === 0) continue;
      const base = r * this.codeDim;
      for (let c = 0; c < this.codeDim; c++) codeGrad[c] += this.projection[base + c] * w;
    }
    const p = this.pool;
    const grad = new Float64Array(this.patchSize * this.patchSize * 3);
    for (let y = 0; y < this.patchSize; y++) {
      for (let x = 0; x < this.patchSize; x++) {
        const cell = (Math.floor(y / p) * this.codeSize + Math.floor(x / p)) * 3;
        for (let ch = 0; ch < 3; ch++) {
          grad[(y * this.patchSize + x) * 3 + ch] = codeGrad[cell + ch] / (p * p);
        }
      }
    }
    return grad;
  }
}

export type BackboneId = "mock" | "ViT-B/32" | "ViT-B/16" | "ViT-L/14";

export function loadEncoder(backbone: BackboneId, dim: number, seed: number): MockClipEncoder {
  if (backbone === "mock") return new MockClipEncoder(dim, 32, seed);
  throw new Error(
    `backbone ${backbone} needs model weights and an inference runtime; ` +
      "this build ships only the deterministic mock backend",
  );
}
