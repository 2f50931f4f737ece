/**
 * Binary embedding container, bit-compatible with the consumer toolkit:
 * little-endian `UDFS` magic, u32 version=1, u64 n, u64 d, u32 class count,
 * then n*d float32 row-major features and n int64 labels. A `<path>.meta`
 * companion carries one `key=value` pair per line (`class.<id>` names,
 * `source_tag`, free keys).
 */

import * as fs from "node:fs";

import { FormatError } from "./errors.js";

export const MAGIC = "UDFS";
export const VERSION = 1;
const HEADER_SIZE = 4 + 4 + 8 + 8 + 4;

export interface Container {
  features: Float32Array;
  n: number;
  d: number;
  labels: BigInt64Array;
  nClasses: number;
  metadata: Record<string, string>;
}

export function encodeContainer(
  features: Float32Array,
  n: number,
  d: number,
  labels: BigInt64Array,
  nClasses: number,
): Buffer {
  if (features.length !== n * d) {
    throw new FormatError(`feature buffer has ${features.length} values, expected ${n * d}`);
  }
  if (labels.length !== n) {
    throw new FormatError(`label buffer has ${labels.length} values, expected ${n}`);
  }
  const buf = Buffer.alloc(HEADER_SIZE + n * d * 4 + n * 8);
  buf.write(MAGIC, 0, "ascii");
  buf.writeUInt32LE(VERSION, 4);
  buf.writeBigUInt64LE(BigInt(n), 8);
  buf.writeBigUInt64LE(BigInt(d), 16);
  buf.writeUInt32LE(nClasses, 24);
  let offset = HEADER_SIZE;
  for (let i = 0; i < features.length; i++, offset += 4) {
    buf.writeFloatLE(features[i], offset);
  }
  for (let i = 0; i < labels.length; i++, offset += 8) {
    buf.writeBigInt64LE(labels[i], offset);
  }
  return buf;
}

function metadataLines(metadata: Record<string, string>): string {
  const lines: string[] = [];
  for (const [key, value] of Object.entries(metadata)) {
    if (key.includes("=") || key.includes("\n") || value.includes("\n")) {
      throw new FormatError(`metadata key/value not representable: ${key}`);
    }
    lines.push(`${key}=${value}`);
  }
  return lines.join("\n") + "\n";
}

export function writeContainer(
  path: string,
  features: Float32Array,
  n: number,
  d: number,
  labels: BigInt64Array,
  nClasses: number,
  metadata: Record<string, string>,
): void {
  fs.writeFileSync(path, encodeContainer(features, n, d, labels, nClasses));
  fs.writeFileSync(path + ".meta", metadataLines(metadata), "utf-8");
}

export function readContainer(path: string): Container {
  const buf = fs.readFileSync(path);
  if (buf.length < HEADER_SIZE) {
    throw new FormatError(`${path}: shorter than the container header`);
  }
  if (buf.toString("ascii", 0, 4) !== MAGIC) {
    throw new FormatError(`${path}: bad magic`);
  }
  if (buf.readUInt32LE(4) !== VERSION) {
    throw new FormatError(`${path}: unsupported version`);
  }
  const n = Number(buf.readBigUInt64LE(8));
  const d = Number(buf.readBigUInt64LE(16));
  const nClasses = buf.readUInt32LE(24);
  const expected = HEADER_SIZE + n * d * 4 + n * 8;
  if (buf.length !== expected) {
    throw new FormatError(`${path}: expected ${expected} bytes, found ${buf.length}`);
  }
  const features = new Float32Array(n * d);
  let offset = HEADER_SIZE;
  for (let i = 0; i < features.length; i++, offset += 4) {
    features[i] = buf.readFloatLE(offset);
  }
  const labels = new BigInt64Array(n);
  for (let i = 0; i < n; i++, offset += 8) {
    labels[i] = buf.readBigInt64LE(offset);
  }
  const metadata: Record<string, string> = {};
  const metaPath = path + ".meta";
  if (fs.existsSync(metaPath)) {
    for (const line of fs.readFileSync(metaPath, "utf-8").split("\n")) {
      if (!line.trim()) continue;
      const eq = line.indexOf("=");
      if (eq < 0) throw new FormatError(`${metaPath}: malformed line ${line}`);
      metadata[line.slice(0, eq)] = line.slice(eq + 1);
    }
  }
  return { features, n, d, labels, nClasses, metadata };
}

export function classMetadata(classNames: string[], sourceTag: string): Record<string, string> {
  const metadata: Record<string, string> = {};
  classNames.forEach((name, i) => {
    metadata[`class.${i}`] = name;
  });
  metadata.source_tag = sourceTag;
  return metadata;
}
