#!/usr/bin/env node
/**
 * Exporter CLI: turn an image dataset (or the built-in synthetic one)
 * into AGCB bundles and augmentation manifests for the evaluator.
 */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { writeBundle } from "./agcb.js";
import { AUGMENTATION_MENU, AugmentationName, Intensity } from "./augment.js";
import { loadDirectoryDataset, syntheticDataset } from "./dataset.js";
import { BackboneId, MockClipEncoder } from "./encoder.js";
import { DEFAULT_INTENSITIES, Dataset, JOB_DEFAULTS, buildManifest, exportBundles } from "./export.js";
import { PGD_DEFAULTS } from "./pgd.js";

function parseEpsilon(text: string): number {
  if (text.includes("/")) {
    const [num, den] = text.split("/").map(Number);
    return num / den;
  }
  return Number(text);
}

function resolveDataset(argv: {
  dataset?: string;
  syntheticClasses: number;
  syntheticPerClass: number;
  dim: number;
  seed: number;
}): Dataset {
  if (argv.dataset) return loadDirectoryDataset(argv.dataset);
  const encoder = new MockClipEncoder(argv.dim, 32, argv.seed);
  const names = Array.from({ length: argv.syntheticClasses }, (_, i) => `class-${String(i).padStart(3, "0")}`);
  return syntheticDataset(encoder, names, argv.syntheticPerClass, argv.seed);
}

const sharedOptions = {
  dataset: { type: "string" as const, describe: "directory of per-class PGM/PPM subdirectories" },
  "synthetic-classes": { type: "number" as const, default: 8, describe: "classes for the built-in synthetic dataset" },
  "synthetic-per-class": { type: "number" as const, default: 4 },
  backbone: { type: "string" as const, default: JOB_DEFAULTS.backbone, choices: ["mock", "ViT-B/32", "ViT-B/16", "ViT-L/14"] },
  dim: { type: "number" as const, default: JOB_DEFAULTS.dim },
  prompt: { type: "string" as const, default: JOB_DEFAULTS.promptTemplate },
  views: { type: "number" as const, default: JOB_DEFAULTS.nViews },
  seed: { type: "number" as const, default: JOB_DEFAULTS.seed },
};

void yargs(hideBin(process.argv))
  .command(
    "export-bundle",
    "encode originals and augmented views; optionally attack and write a second bundle",
    (y) =>
      y.options({
        ...sharedOptions,
        aug: { type: "string", default: JOB_DEFAULTS.augmentation, choices: [...AUGMENTATION_MENU, "identity"] },
        intensity: { type: "string", default: JOB_DEFAULTS.intensity, choices: ["weak", "medium", "strong"] },
        distortion: { type: "number", default: JOB_DEFAULTS.strength, describe: "perspective distortion scale" },
        attack: { type: "string", default: "none", choices: ["none", "pgd"] },
        epsilon: { type: "string", default: "4/255" },
        steps: { type: "number", default: PGD_DEFAULTS.steps },
        "out-clean": { type: "string", demandOption: true },
        "out-adv": { type: "string", describe: "required when --attack pgd" },
      }),
    (argv) => {
      if (argv.attack === "pgd" && !argv.outAdv) {
        throw new Error("--attack pgd needs --out-adv");
      }
      const result = exportBundles({
        dataset: resolveDataset(argv as never),
        backbone: argv.backbone as BackboneId,
        dim: argv.dim,
        promptTemplate: argv.prompt,
        augmentation: argv.aug as AugmentationName,
        intensity: argv.intensity as Intensity,
        strength: argv.aug === "random_perspective" ? argv.distortion : undefined,
        nViews: argv.views,
        attack: argv.attack as "none" | "pgd",
        pgd: { epsilon: parseEpsilon(argv.epsilon), steps: argv.steps },
        seed: argv.seed,
      });
      writeBundle(result.clean, argv.outClean);
      console.log(`wrote ${argv.outClean} (${result.clean.labels.length} samples)`);
      if (result.adversarial) {
        writeBundle(result.adversarial, argv.outAdv!);
        console.log(`wrote ${argv.outAdv} (attack failures: ${result.attackFailures})`);
      }
    },
  )
  .command(
    "build-manifest",
    "one bundle per (augmentation, intensity) plus a manifest file",
    (y) =>
      y.options({
        ...sharedOptions,
        menu: { type: "string", default: AUGMENTATION_MENU.join(",") },
        intensities: { type: "string", default: DEFAULT_INTENSITIES.join(",") },
        attack: { type: "string", default: "none", choices: ["none", "pgd"] },
        epsilon: { type: "string", default: "4/255" },
        steps: { type: "number", default: PGD_DEFAULTS.steps },
        "out-dir": { type: "string", demandOption: true },
      }),
    (argv) => {
      const { manifestPath, entries } = buildManifest({
        dataset: resolveDataset(argv as never),
        backbone: argv.backbone as BackboneId,
        dim: argv.dim,
        promptTemplate: argv.prompt,
        nViews: argv.views,
        attack: argv.attack as "none" | "pgd",
        pgd: { epsilon: parseEpsilon(argv.epsilon), steps: argv.steps },
        seed: argv.seed,
        menu: argv.menu.split(",").map((s) => s.trim()) as AugmentationName[],
        intensities: argv.intensities.split(",").map((s) => s.trim()) as Intensity[],
        outDir: argv.outDir,
      });
      console.log(`wrote ${entries.length} bundles and ${manifestPath}`);
    },
  )
  .demandCommand(1)
  .strict()
  .help()
  .parse();
