/**
 * Export pipeline: encode a labelled image set, generate N stochastic
 * augmented views per image, optionally attack each image, and write the
 * evaluator's bundle files plus augmentation manifests.
 */

import { mkdirSync } from "node:fs";
import { join } from "node:path";

import { Bundle, Condition, ManifestEntry, writeBundle, writeManifest } from "./agcb.js";
import {
  AUGMENTATION_MENU,
  AugmentationName,
  Intensity,
  INTENSITY_FRACTION,
  makeAugmentation,
} from "./augment.js";
import { BackboneId, MockClipEncoder, loadEncoder } from "./encoder.js";
import { Image, resizeImage } from "./image.js";
import { PGD_DEFAULTS, PgdConfig, pgdAttack } from "./pgd.js";
import { Rng } from "./rng.js";

export interface LabelledImage {
  image: Image;
  label: number;
}

export interface Dataset {
  classNames: string[];
  samples: LabelledImage[];
}

export interface ExportJob {
  dataset: Dataset;
  backbone: BackboneId;
  dim: number;
  promptTemplate: string; // "{}" is replaced by the class name
  augmentation: AugmentationName;
  intensity: Intensity;
  /** Perspective distortion override; defaults to 0.5 for the default augmentation. */
  strength?: number;
  nViews: number;
  attack: "none" | "pgd";
  pgd?: PgdConfig;
  seed: number;
}

export const JOB_DEFAULTS = {
  backbone: "mock" as BackboneId,
  dim: 64,
  promptTemplate: "a photo of a {}",
  augmentation: "random_perspective" as AugmentationName,
  intensity: "medium" as Intensity,
  strength: 0.5,
  nViews: 32,
  attack: "none" as const,
  pgd: PGD_DEFAULTS,
  seed: 7,
};

export interface ExportResult {
  clean: Bundle;
  adversarial?: Bundle;
  attackFailures: number;
}

function textBank(encoder: MockClipEncoder, job: ExportJob): Float64Array[] {
  return job.dataset.classNames.map((name) =>
    encoder.encodeText(job.promptTemplate.replace("{}", name)),
  );
}

function toF32(rows: Float64Array[]): Float32Array {
  const out = new Float32Array(rows.length * rows[0].length);
  rows.forEach((row, i) => out.set(row, i * row.length));
  return out;
}

/** Encode views of one image under a fresh per-(image, view) stream. */
function encodeViews(
  img: Image,
  index: number,
  encoder: MockClipEncoder,
  job: ExportJob,
  streamTag: string,
): Float64Array[] {
  const augment = makeAugmentation(job.augmentation, job.intensity, job.strength);
  const out: Float64Array[] = [];
  for (let v = 0; v < job.nViews; v++) {
    const rng = new Rng(job.seed, `${streamTag}:${index}:${v}`);
    out.push(encoder.encodeImage(augment(img, rng)));
  }
  return out;
}

function assemble(
  condition: Condition,
  job: ExportJob,
  bank: Float64Array[],
  originals: Float64Array[],
  views: Float64Array[][],
): Bundle {
  const d = job.dim;
  const m = originals.length;
  const n = job.nViews;
  const viewArray = new Float32Array(m * n * d);
  views.forEach((sampleViews, i) =>
    sampleViews.forEach((view, v) => viewArray.set(view, (i * n + v) * d)),
  );
  return {
    condition,
    names: job.dataset.classNames,
    bank: toF32(bank),
    labels: Uint32Array.from(job.dataset.samples.map((s) => s.label)),
    originals: toF32(originals),
    views: viewArray,
    d,
    nViews: n,
  };
}

export function exportBundles(job: ExportJob): ExportResult {
  const encoder = loadEncoder(job.backbone, job.dim, job.seed);
  const bank = textBank(encoder, job);
  const cleanFeatures: Float64Array[] = [];
  const cleanViews: Float64Array[][] = [];
  const advFeatures: Float64Array[] = [];
  const advViews: Float64Array[][] = [];
  let attackFailures = 0;
  job.dataset.samples.forEach((sample, i) => {
    cleanFeatures.push(encoder.encodeImage(sample.image));
    cleanViews.push(encodeViews(sample.image, i, encoder, job, "clean-view"));
    if (job.attack === "pgd") {
      const patch = resizeImage(sample.image, encoder.patchSize, encoder.patchSize);
      const result = pgdAttack(patch, sample.label, bank, encoder, job.pgd ?? PGD_DEFAULTS);
      if (!result.succeeded) attackFailures++;
      advFeatures.push(result.feature);
      advViews.push(encodeViews(result.image, i, encoder, job, "adv-view"));
    }
  });
  const clean = assemble("clean", job, bank, cleanFeatures, cleanViews);
  if (job.attack !== "pgd") return { clean, attackFailures: 0 };
  return {
    clean,
    adversarial: assemble("adversarial", job, bank, advFeatures, advViews),
    attackFailures,
  };
}

export interface ManifestJob extends Omit<ExportJob, "augmentation" | "intensity"> {
  menu: AugmentationName[];
  intensities: Intensity[];
  outDir: string;
}

export const DEFAULT_MENU = [...AUGMENTATION_MENU];
export const DEFAULT_INTENSITIES = Object.keys(INTENSITY_FRACTION) as Intensity[];

/** One bundle per (augmentation, intensity) pair plus the manifest file. */
export function buildManifest(job: ManifestJob): { manifestPath: string; entries: ManifestEntry[] } {
  mkdirSync(job.outDir, { recursive: true });
  const entries: ManifestEntry[] = [];
  for (const name of job.menu) {
    for (const intensity of job.intensities) {
      const result = exportBundles({
        ...job,
        augmentation: name,
        intensity,
        strength: undefined, // intensity decides the strength for menu bundles
      });
      const bundle = job.attack === "pgd" ? result.adversarial! : result.clean;
      const path = join(job.outDir, `${name}-${intensity}.agcb`);
      writeBundle(bundle, path);
      entries.push({ name, intensity, path });
    }
  }
  const manifestPath = join(job.outDir, "manifest.tsv");
  writeManifest(entries, manifestPath);
  return { manifestPath, entries };
}
