/**
 * Zero-shot class prototypes: each class row is the L2-normalized mean of
 * that class's per-template text embeddings.
 */

import * as fs from "node:fs";

import { classMetadata, writeContainer } from "./container.js";
import { Encoder } from "./encoders.js";
import { ConfigError, JobError } from "./errors.js";
import { TEMPLATE_SETS, fillTemplate } from "./templates.js";

export interface PrototypeJob {
  classNames: string[];
  encoder: Encoder;
  templateSet: string;
  outPath: string;
  sourceTag?: string;
}

export function readClassFile(path: string): string[] {
  const names = fs
    .readFileSync(path, "utf-8")
    .split("\n")
    .map((line) => line.trim())
    .filter((line) => line.length > 0 && !line.startsWith("#"));
  if (names.length === 0) {
    throw new ConfigError(`class file ${path} lists no classes`);
  }
  return names;
}

export async function classPrototype(
  encoder: Encoder,
  className: string,
  templates: readonly string[],
): Promise<Float32Array> {
  const dim = encoder.dim;
  const mean = new Float64Array(dim);
  for (const template of templates) {
    const embedding = await encoder.embedText(fillTemplate(template, className));
    if (embedding.length !== dim) {
      throw new JobError(
        `encoder returned ${embedding.length}-d text embedding, expected ${dim}`,
      );
    }
    for (let j = 0; j < dim; j++) mean[j] += embedding[j];
  }
  for (let j = 0; j < dim; j++) mean[j] /= templates.length;
  let norm = 0;
  for (let j = 0; j < dim; j++) norm += mean[j] * mean[j];
  norm = Math.sqrt(norm);
  if (norm === 0) {
    throw new JobError(`prototype for ${className} collapsed to the zero vector`);
  }
  const out = new Float32Array(dim);
  for (let j = 0; j < dim; j++) out[j] = mean[j] / norm;
  return out;
}

export async function buildTextPrototypes(job: PrototypeJob): Promise<void> {
  const templates = TEMPLATE_SETS[job.templateSet];
  if (!templates) {
    throw new ConfigError(
      `unknown template set ${job.templateSet}; known: ${Object.keys(TEMPLATE_SETS).join(", ")}`,
    );
  }
  if (job.classNames.length === 0) {
    throw new ConfigError("prototype job needs at least one class");
  }
  const dim = job.encoder.dim;
  const features = new Float32Array(job.classNames.length * dim);
  const labels = new BigInt64Array(job.classNames.length);
  for (let i = 0; i < job.classNames.length; i++) {
    features.set(await classPrototype(job.encoder, job.classNames[i], templates), i * dim);
    labels[i] = BigInt(i);
  }
  const metadata = classMetadata(job.classNames, job.sourceTag ?? "text-prototypes");
  metadata.encoder = job.encoder.id;
  metadata.template_set = job.templateSet;
  metadata.template_count = String(templates.length);
  metadata.template_provenance = "assembled from the published CLIP prompt-ensemble collections";
  writeContainer(
    job.outPath,
    features,
    job.classNames.length,
    dim,
    labels,
    job.classNames.length,
    metadata,
  );
}
