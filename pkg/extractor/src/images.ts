/**
 * Image-folder extraction: one subfolder per class, labels assigned by the
 * sorted subfolder order, files visited in sorted path order so the output
 * is deterministic for a fixed encoder.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { classMetadata, writeContainer } from "./container.js";
import { Encoder } from "./encoders.js";
import { ConfigError, JobError } from "./errors.js";

export interface ExtractionJob {
  root: string;
  encoder: Encoder;
  outPath: string;
  sourceTag?: string;
  /** Extensions to accept; everything else is ignored silently. */
  extensions?: string[];
}

const DEFAULT_EXTENSIONS = [".jpg", ".jpeg", ".png", ".bmp", ".webp", ".gif", ".bin"];

export function listClassFolders(root: string): string[] {
  if (!fs.existsSync(root) || !fs.statSync(root).isDirectory()) {
    throw new ConfigError(`image root ${root} is not a directory`);
  }
  const classes = fs
    .readdirSync(root, { withFileTypes: true })
    .filter((e) => e.isDirectory())
    .map((e) => e.name)
    .sort();
  if (classes.length === 0) {
    throw new ConfigError(`image root ${root} has no class subfolders`);
  }
  return classes;
}

export function listImages(root: string, className: string, extensions: string[]): string[] {
  const dir = path.join(root, className);
  const files = fs
    .readdirSync(dir, { withFileTypes: true })
    .filter((e) => e.isFile() && extensions.includes(path.extname(e.name).toLowerCase()))
    .map((e) => path.join(dir, e.name))
    .sort();
  if (files.length === 0) {
    throw new ConfigError(`class folder ${dir} has no images`);
  }
  return files;
}

export async function extractImageFeatures(job: ExtractionJob): Promise<void> {
  const extensions = job.extensions ?? DEFAULT_EXTENSIONS;
  const classes = listClassFolders(job.root);
  const rows: Float32Array[] = [];
  const labels: bigint[] = [];
  for (let classIndex = 0; classIndex < classes.length; classIndex++) {
    for (const file of listImages(job.root, classes[classIndex], extensions)) {
      let bytes: Buffer;
      try {
        bytes = fs.readFileSync(file);
      } catch (err) {
        console.warn(`warning: skipping unreadable image ${file}: ${(err as Error).message}`);
        continue;
      }
      try {
        rows.push(await job.encoder.embedImage(bytes));
      } catch (err) {
        console.warn(`warning: skipping undecodable image ${file}: ${(err as Error).message}`);
        continue;
      }
      labels.push(BigInt(classIndex));
    }
  }
  if (rows.length === 0) {
    throw new JobError(`extraction produced no rows under ${job.root}`);
  }
  const d = rows[0].length;
  const features = new Float32Array(rows.length * d);
  rows.forEach((row, i) => features.set(row, i * d));
  const metadata = classMetadata(classes, job.sourceTag ?? path.basename(path.resolve(job.root)));
  metadata.encoder = job.encoder.id;
  writeContainer(
    job.outPath,
    features,
    rows.length,
    d,
    BigInt64Array.from(labels),
    classes.length,
    metadata,
  );
}
