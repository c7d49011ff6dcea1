/**
 * AGCB bundle writer/reader, byte-compatible with the evaluator.
 *
 * Layout (little-endian): magic "AGCB"; u32 version = 1; u32 d, C, M, N;
 * u8 condition (0 clean, 1 adversarial, 2 unspecified) + 3 zero pad
 * bytes; C names as u16 byte length + UTF-8 bytes; C*d float32 bank
 * rows; M records of (u32 label, d float32 original, N*d float32 views).
 */

import { readFileSync, writeFileSync } from "node:fs";

export const MAGIC = "AGCB";
export const FORMAT_VERSION = 1;
export const CONDITIONS = ["clean", "adversarial", "unspecified"] as const;
export type Condition = (typeof CONDITIONS)[number];

export interface Bundle {
  condition: Condition;
  names: string[];
  /** C x d, row major. */
  bank: Float32Array;
  labels: Uint32Array;
  /** M x d, row major. */
  originals: Float32Array;
  /** M x N x d, row major. */
  views: Float32Array;
  d: number;
  nViews: number;
}

export function bundleCounts(b: Bundle): { d: number; c: number; m: number; n: number } {
  const d = b.d;
  const c = b.names.length;
  const m = b.labels.length;
  const n = b.nViews;
  if (b.bank.length !== c * d) throw new Error(`bank length ${b.bank.length} != C*d`);
  if (b.originals.length !== m * d) throw new Error(`originals length ${b.originals.length} != M*d`);
  if (b.views.length !== m * n * d) throw new Error(`views length ${b.views.length} != M*N*d`);
  if (d < 2 || c < 2 || m < 1 || n < 0) throw new Error("bundle dimensions out of range");
  for (let i = 0; i < m; i++) {
    if (b.labels[i] >= c) throw new Error(`sample ${i} label ${b.labels[i]} out of range`);
  }
  return { d, c, m, n };
}

export function encodeBundle(b: Bundle): Buffer {
  const { d, c, m, n } = bundleCounts(b);
  const encodedNames = b.names.map((name) => Buffer.from(name, "utf-8"));
  for (const [i, raw] of encodedNames.entries()) {
    if (raw.length > 0xffff) throw new Error(`class name ${i} too long`);
  }
  const namesSize = encodedNames.reduce((acc, raw) => acc + 2 + raw.length, 0);
  const total = 28 + namesSize + 4 * c * d + m * (4 + 4 * d + 4 * n * d);
  const buf = Buffer.alloc(total);
  let pos = 0;
  buf.write(MAGIC, pos, "ascii");
  pos += 4;
  pos = buf.writeUInt32LE(FORMAT_VERSION, pos);
  pos = buf.writeUInt32LE(d, pos);
  pos = buf.writeUInt32LE(c, pos);
  pos = buf.writeUInt32LE(m, pos);
  pos = buf.writeUInt32LE(n, pos);
  pos = buf.writeUInt8(CONDITIONS.indexOf(b.condition), pos);
  pos += 3; // zero padding
  for (const raw of encodedNames) {
    pos = buf.writeUInt16LE(raw.length, pos);
    pos += raw.copy(buf, pos);
  }
  for (const value of b.bank) pos = buf.writeFloatLE(value, pos);
  for (let i = 0; i < m; i++) {
    pos = buf.writeUInt32LE(b.labels[i], pos);
    for (let k = 0; k < d; k++) pos = buf.writeFloatLE(b.originals[i * d + k], pos);
    for (let k = 0; k < n * d; k++) pos = buf.writeFloatLE(b.views[i * n * d + k], pos);
  }
  if (pos !== total) throw new Error(`internal layout error: wrote ${pos} of ${total}`);
  return buf;
}

export function writeBundle(b: Bundle, path: string): void {
  writeFileSync(path, encodeBundle(b));
}

export function decodeBundle(buf: Buffer): Bundle {
  let pos = 0;
  const take = (bytes: number, what: string): number => {
    if (pos + bytes > buf.length) {
      throw new Error(`truncated at byte ${buf.length} while reading ${what}`);
    }
    const at = pos;
    pos += bytes;
    return at;
  };
  const magic = buf.subarray(take(4, "magic"), 4).toString("ascii");
  if (magic !== MAGIC) throw new Error(`bad magic ${JSON.stringify(magic)}`);
  const version = buf.readUInt32LE(take(4, "version"));
  if (version !== FORMAT_VERSION) throw new Error(`unsupported version ${version}`);
  const d = buf.readUInt32LE(take(4, "d"));
  const c = buf.readUInt32LE(take(4, "C"));
  const m = buf.readUInt32LE(take(4, "M"));
  const n = buf.readUInt32LE(take(4, "N"));
  const cond = buf.readUInt8(take(1, "condition"));
  const pad = buf.subarray(take(3, "padding"), pos);
  if (cond >= CONDITIONS.length) throw new Error(`unknown condition byte ${cond}`);
  if (pad.some((x) => x !== 0)) throw new Error("nonzero header padding");
  const names: string[] = [];
  for (let i = 0; i < c; i++) {
    const len = buf.readUInt16LE(take(2, `name ${i} length`));
    const at = take(len, `name ${i}`);
    names.push(buf.subarray(at, at + len).toString("utf-8"));
  }
  const readFloats = (count: number, what: string): Float32Array => {
    const at = take(4 * count, what);
    const out = new Float32Array(count);
    for (let i = 0; i < count; i++) out[i] = buf.readFloatLE(at + 4 * i);
    return out;
  };
  const bank = readFloats(c * d, "bank");
  const labels = new Uint32Array(m);
  const originals = new Float32Array(m * d);
  const views = new Float32Array(m * n * d);
  for (let i = 0; i < m; i++) {
    labels[i] = buf.readUInt32LE(take(4, `label ${i}`));
    originals.set(readFloats(d, `original ${i}`), i * d);
    views.set(readFloats(n * d, `views ${i}`), i * n * d);
  }
  if (pos !== buf.length) throw new Error(`${buf.length - pos} trailing bytes`);
  const bundle: Bundle = {
    condition: CONDITIONS[cond],
    names,
    bank,
    labels,
    originals,
    views,
    d,
    nViews: n,
  };
  bundleCounts(bundle);
  return bundle;
}

export function readBundle(path: string): Bundle {
  return decodeBundle(readFileSync(path));
}

export interface ManifestEntry {
  name: string;
  intensity: string;
  path: string;
}

export function writeManifest(entries: ManifestEntry[], path: string): void {
  const lines = entries.map((e) => `${e.name}\t${e.intensity}\t${e.path}`);
  writeFileSync(path, lines.join("\n") + "\n", "utf-8");
}
