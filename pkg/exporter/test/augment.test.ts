import { describe, expect, it } from "vitest";

import {
  INTENSITY_FRACTION,
  hflip,
  identity,
  makeAugmentation,
  randomPerspective,
  rotation,
} from "../src/augment.js";
import { Image, createImage, pixel } from "../src/image.js";
import { Rng } from "../src/rng.js";

function gradientImage(size = 24): Image {
  const img = createImage(size, size);
  for (let y = 0; y < size; y++) {
    for (let x = 0; x < size; x++) {
      img.data[(y * size + x) * 3 + 0] = x / (size - 1);
      img.data[(y * size + x) * 3 + 1] = y / (size - 1);
      img.data[(y * size + x) * 3 + 2] = 0.5;
    }
  }
  return img;
}

function maxAbsDiff(a: Image, b: Image): number {
  let max = 0;
  for (let i = 0; i < a.data.length; i++) max = Math.max(max, Math.abs(a.data[i] - b.data[i]));
  return max;
}

describe("augmentations", () => {
  it("identity returns an equal copy", () => {
    const img = gradientImage();
    const out = identity()(img, new Rng(0, "id"));
    expect(out).not.toBe(img);
    expect(maxAbsDiff(img, out)).toBe(0);
  });

  it("same seed gives identical perspective warps, different seeds differ", () => {
    const img = gradientImage();
    const aug = randomPerspective(0.5);
    const a = aug(img, new Rng(7, "view:0"));
    const b = aug(img, new Rng(7, "view:0"));
    const c = aug(img, new Rng(7, "view:1"));
    expect(maxAbsDiff(a, b)).toBe(0);
    expect(maxAbsDiff(a, c)).toBeGreaterThan(1e-3);
  });

  it("zero distortion is a no-op warp", () => {
    const img = gradientImage();
    const out = randomPerspective(0)(img, new Rng(1, "x"));
    expect(maxAbsDiff(img, out)).toBeLessThan(1e-6);
  });

  it("perspective actually moves content at medium distortion", () => {
    const img = gradientImage();
    const out = randomPerspective(0.5)(img, new Rng(3, "x"));
    expect(maxAbsDiff(img, out)).toBeGreaterThan(0.05);
  });

  it("rotation by zero keeps the image", () => {
    const img = gradientImage();
    const out = rotation(0)(img, new Rng(2, "x"));
    expect(maxAbsDiff(img, out)).toBeLessThan(1e-6);
  });

  it("hflip with probability 1 mirrors pixels", () => {
    const img = gradientImage(8);
    const out = hflip(1.0)(img, new Rng(0, "x"));
    expect(pixel(out, 0, 3, 0)).toBeCloseTo(pixel(img, 7, 3, 0), 12);
  });

  it("intensity levels quarter the natural range", () => {
    expect(INTENSITY_FRACTION.weak).toBe(0.25);
    expect(INTENSITY_FRACTION.medium).toBe(0.5);
    expect(INTENSITY_FRACTION.strong).toBe(0.75);
  });

  it("menu names construct under every intensity", () => {
    const img = gradientImage(16);
    for (const name of [
      "random_perspective",
      "random_crop",
      "center_crop",
      "rotation",
      "random_resized_crop",
      "hflip",
    ] as const) {
      for (const intensity of ["weak", "medium", "strong"] as const) {
        const out = makeAugmentation(name, intensity)(img, new Rng(5, `${name}:${intensity}`));
        expect(out.width).toBe(img.width);
        expect(out.height).toBe(img.height);
      }
    }
  });
});
