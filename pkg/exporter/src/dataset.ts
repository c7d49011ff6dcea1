/**
 * Dataset loading: a directory with one subdirectory per class holding
 * binary PGM/PPM images, plus a deterministic synthetic dataset used by
 * the tests and for smoke runs without any files.
 */

import { readdirSync, statSync } from "node:fs";
import { join } from "node:path";

import { Dataset } from "./export.js";
import { MockClipEncoder } from "./encoder.js";
import { decodePnm } from "./image.js";
import { Rng } from "./rng.js";

export function loadDirectoryDataset(root: string): Dataset {
  const classNames = readdirSync(root)
    .filter((entry) => statSync(join(root, entry)).isDirectory())
    .sort();
  if (classNames.length < 2) throw new Error(`${root}: need at least two class directories`);
  const samples = [];
  for (const [label, name] of classNames.entries()) {
    const dir = join(root, name);
    const files = readdirSync(dir)
      .filter((f) => /\.(pgm|ppm|pnm)$/i.test(f))
      .sort();
    for (const file of files) {
      samples.push({ image: decodePnm(join(dir, file)), label });
    }
  }
  if (!samples.length) throw new Error(`${root}: no .pgm/.ppm images found`);
  return { classNames, samples };
}

/**
 * Synthetic dataset built from the mock encoder's class canvases: sample
 * i of class y is the low-frequency canvas whose encoding IS the class
 * text feature, at reduced contrast plus pixel noise. The zero-shot task
 * is solvable by construction and attacks have something to break.
 */
export function syntheticDataset(
  encoder: MockClipEncoder,
  classNames: string[],
  perClass: number,
  seed: number,
  promptTemplate = "a photo of a {}",
  pixelNoise = 0.02,
  contrast = 0.15,
): Dataset {
  const samples = [];
  for (const [label, name] of classNames.entries()) {
    const prompt = promptTemplate.replace("{}", name);
    for (let k = 0; k < perClass; k++) {
      const img = encoder.classCanvas(prompt, contrast);
      const rng = new Rng(seed, `dataset:${label}:${k}`);
      for (let i = 0; i < img.data.length; i++) {
        img.data[i] = Math.min(1, Math.max(0, img.data[i] + pixelNoise * rng.gauss()));
      }
      samples.push({ image: img, label });
    }
  }
  return { classNames, samples };
}
