/**
 * Untargeted L-infinity projected gradient descent on the zero-shot
 * cosine margin: push the true-class score below the best rival score.
 * Operates on the encoder's input patch; every step re-projects into the
 * epsilon ball and the valid pixel range.
 */

import { DifferentiableImageEncoder, dot } from "./encoder.js";
import { Image } from "./image.js";

export interface PgdConfig {
  epsilon: number; // L-inf radius in pixel units
  steps: number;
  stepSize?: number; // default 2.5 * epsilon / steps
}

export const PGD_DEFAULTS: PgdConfig = { epsilon: 4 / 255, steps: 100 };

export interface AttackResult {
  image: Image;
  feature: Float64Array;
  margin: number;
  succeeded: boolean;
}

export function cosineMargin(feature: Float64Array, bank: Float64Array[], label: number): number {
  let best = -Infinity;
  for (let j = 0; j < bank.length; j++) {
    if (j === label) continue;
    best = Math.max(best, dot(feature, bank[j]));
  }
  return dot(feature, bank[label]) - best;
}

function bestRival(feature: Float64Array, bank: Float64Array[], label: number): number {
  let best = -Infinity;
  let arg = -1;
  for (let j = 0; j < bank.length; j++) {
    if (j === label) continue;
    const s = dot(feature, bank[j]);
    if (s > best) {
      best = s;
      arg = j;
    }
  }
  return arg;
}

export function pgdAttack(
  img: Image,
  label: number,
  bank: Float64Array[],
  encoder: DifferentiableImageEncoder,
  cfg: PgdConfig = PGD_DEFAULTS,
): AttackResult {
  if (img.width !== encoder.patchSize || img.height !== encoder.patchSize) {
    throw new Error("attack operates on encoder-sized patches");
  }
  const alpha = cfg.stepSize ?? (2.5 * cfg.epsilon) / cfg.steps;
  const reference = img.data;
  const current: Image = { ...img, data: new Float32Array(img.data) };
  for (let step = 0; step < cfg.steps; step++) {
    const feature = encoder.encodeImage(current);
    // Gradient of (rival - true) score, rival frozen at this iterate.
    const rival = bestRival(feature, bank, label);
    const direction = new Float64Array(feature.length);
    for (let r = 0; r < direction.length; r++) direction[r] = bank[rival][r] - bank[label][r];
    const grad = encoder.scoreGradient(current, direction);
    for (let i = 0; i < current.data.length; i++) {
      let v = current.data[i] + alpha * Math.sign(grad[i]);
      const lo = Math.max(0, reference[i] - cfg.epsilon);
      const hi = Math.min(1, reference[i] + cfg.epsilon);
      v = Math.min(hi, Math.max(lo, v));
      current.data[i] = v;
    }
  }
  const feature = encoder.encodeImage(current);
  const margin = cosineMargin(feature, bank, label);
  return { image: current, feature, margin, succeeded: margin < 0 };
}
