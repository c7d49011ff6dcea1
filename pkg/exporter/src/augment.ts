/**
 * Stochastic image augmentations at three named intensities.
 *
 * Intensity maps each transform's strength parameter to 0.25 / 0.50 / 0.75
 * of its natural range (the levels themselves are conventional names, the
 * fractions are ours). `randomPerspective` follows the usual corner
 * displacement semantics: each output corner moves inward by up to
 * distortion * half-extent along both axes. Warp-based transforms fill
 * uncovered pixels with mid-gray, the synthetic canvas level, so border
 * wedges do not drown the low-contrast content.
 */

import {
  Image,
  cloneImage,
  cropImage,
  hflipImage,
  homographyFromCorners,
  resizeImage,
  warpImage,
} from "./image.js";
import { Rng } from "./rng.js";

export type Intensity = "weak" | "medium" | "strong";

export const INTENSITY_FRACTION: Record<Intensity, number> = {
  weak: 0.25,
  medium: 0.5,
  strong: 0.75,
};

export type AugmentFn = (img: Image, rng: Rng) => Image;

// Fill level for pixels a warp leaves uncovered (the synthetic canvas gray).
export const WARP_FILL = 0.5;

export function randomPerspective(distortion: number): AugmentFn {
  if (!(distortion >= 0 && distortion <= 1)) throw new Error("distortion must be in [0, 1]");
  return (img, rng) => {
    const hw = img.width / 2;
    const hh = img.height / 2;
    const dx = () => rng.uniform(0, distortion * hw);
    const dy = () => rng.uniform(0, distortion * hh);
    const w = img.width - 1;
    const h = img.height - 1;
    // Destination corners move inward; warp inverse-maps output to source.
    const dst: Array<[number, number]> = [
      [dx(), dy()],
      [w - dx(), dy()],
      [w - dx(), h - dy()],
      [dx(), h - dy()],
    ];
    const src: Array<[number, number]> = [
      [0, 0],
      [w, 0],
      [w, h],
      [0, h],
    ];
    const homography = homographyFromCorners(dst, src);
    return warpImage(img, homography, WARP_FILL);
  };
}

export function randomCrop(fraction: number): AugmentFn {
  return (img, rng) => {
    const cw = Math.max(1, Math.round(img.width * (1 - fraction)));
    const ch = Math.max(1, Math.round(img.height * (1 - fraction)));
    const x0 = rng.int(img.width - cw + 1);
    const y0 = rng.int(img.height - ch + 1);
    return resizeImage(cropImage(img, x0, y0, cw, ch), img.width, img.height);
  };
}

export function centerCrop(fraction: number): AugmentFn {
  return (img) => {
    const cw = Math.max(1, Math.round(img.width * (1 - fraction)));
    const ch = Math.max(1, Math.round(img.height * (1 - fraction)));
    const x0 = Math.floor((img.width - cw) / 2);
    const y0 = Math.floor((img.height - ch) / 2);
    return resizeImage(cropImage(img, x0, y0, cw, ch), img.width, img.height);
  };
}

export function rotation(maxDegrees: number): AugmentFn {
  return (img, rng) => {
    const angle = rng.uniform(-maxDegrees, maxDegrees) * (Math.PI / 180);
    const cx = (img.width - 1) / 2;
    const cy = (img.height - 1) / 2;
    const cos = Math.cos(angle);
    const sin = Math.sin(angle);
    // Inverse rotation around the image center as a homography.
    const h = Float64Array.from([
      cos,
      sin,
      cx - cos * cx - sin * cy,
      -sin,
      cos,
      cy + sin * cx - cos * cy,
      0,
      0,
      1,
    ]);
    return warpImage(img, h, WARP_FILL);
  };
}

export function randomResizedCrop(maxZoom: number): AugmentFn {
  return (img, rng) => {
    const scale = rng.uniform(1 / (1 + maxZoom), 1.0);
    const cw = Math.max(1, Math.round(img.width * scale));
    const ch = Math.max(1, Math.round(img.height * scale));
    const x0 = rng.int(img.width - cw + 1);
    const y0 = rng.int(img.height - ch + 1);
    return resizeImage(cropImage(img, x0, y0, cw, ch), img.width, img.height);
  };
}

export function hflip(probability: number): AugmentFn {
  return (img, rng) => (rng.next() < probability ? hflipImage(img) : cloneImage(img));
}

export function identity(): AugmentFn {
  return (img) => cloneImage(img);
}

export const AUGMENTATION_MENU = [
  "random_perspective",
  "random_crop",
  "center_crop",
  "rotation",
  "random_resized_crop",
  "hflip",
] as const;

export type AugmentationName = (typeof AUGMENTATION_MENU)[number] | "identity";

/**
 * Build an augmentation at a named intensity. An explicit `strength`
 * overrides the level fraction (used for the perspective distortion knob,
 * default 0.5).
 */
export function makeAugmentation(
  name: AugmentationName,
  intensity: Intensity = "medium",
  strength?: number,
): AugmentFn {
  const level = strength ?? INTENSITY_FRACTION[intensity];
  switch (name) {
    case "random_perspective":
      return randomPerspective(level);
    case "random_crop":
      return randomCrop(0.5 * level);
    case "center_crop":
      return centerCrop(0.5 * level);
    case "rotation":
      return rotation(180 * level);
    case "random_resized_crop":
      return randomResizedCrop(level);
    case "hflip":
      return hflip(level);
    case "identity":
      return identity();
    default:
      throw new Error(`unknown augmentation ${name satisfies never}`);
  }
}
