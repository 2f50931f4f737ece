/**
 * Encoder registry. Real encoders (CLIP, DINOv2) run through
 * `@xenova/transformers` and fetch their weights on first use; the
 * deterministic `hash-<dim>` encoder exists for offline pipelines and tests:
 * it maps input bytes to a reproducible pseudo-random vector, so extraction
 * output is a pure function of the input files.
 */

import { createHash } from "node:crypto";

import { ConfigError } from "./errors.js";

export interface Encoder {
  readonly id: string;
  readonly dim: number;
  embedImage(bytes: Uint8Array): Promise<Float32Array>;
  /** Throws ConfigError for image-only encoders. */
  embedText(text: string): Promise<Float32Array>;
}

function hashToFloats(seedBytes: Uint8Array, dim: number): Float32Array {
  const out = new Float32Array(dim);
  const seed = createHash("sha256").update(seedBytes).digest();
  let produced = 0;
  let counter = 0;
  while (produced < dim) {
    const block = createHash("sha256")
      .update(seed)
      .update(Buffer.from(String(counter++), "ascii"))
      .digest();
    for (let i = 0; i + 4 <= block.length && produced < dim; i += 4) {
      // uniform in [-1, 1) from 32 hash bits
      out[produced++] = (block.readUInt32LE(i) / 2 ** 31) - 1.0;
    }
  }
  return out;
}

class HashEncoder implements Encoder {
  constructor(readonly id: string, readonly dim: number) {}

  async embedImage(bytes: Uint8Array): Promise<Float32Array> {
    return hashToFloats(bytes, this.dim);
  }

  async embedText(text: string): Promise<Float32Array> {
    return hashToFloats(Buffer.from("text:" + text, "utf-8"), this.dim);
  }
}

interface ClipSpec {
  model: string;
  dim: number;
}

const CLIP_MODELS: Record<string, ClipSpec> = {
  "clip-vit-l-14-336": { model: "Xenova/clip-vit-large-patch14-336", dim: 768 },
  "clip-vit-b-16": { model: "Xenova/clip-vit-base-patch16", dim: 512 },
};

const DINO_MODELS: Record<string, ClipSpec> = {
  "dinov2-vitl14": { model: "Xenova/dinov2-large", dim: 1024 },
  "dinov2-vitb14": { model: "Xenova/dinov2-base", dim: 768 },
};

async function transformersModule(): Promise<any> {
  try {
    // optional dependency, resolved at runtime only
    // @ts-ignore - no type declarations when the optional dep is absent
    return await import("@xenova/transformers");
  } catch (err) {
    throw new ConfigError(
      "this encoder needs the optional '@xenova/transformers' dependency " +
      `(npm install @xenova/transformers): ${(err as Error).message}`,
    );
  }
}

class ClipEncoder implements Encoder {
  readonly dim: number;

  private vision: any;
  private processor: any;
  private text: any;
  private tokenizer: any;

  constructor(readonly id: string, private readonly spec: ClipSpec) {
    this.dim = spec.dim;
  }

  private async visionParts() {
    if (!this.vision) {
      const t = await transformersModule();
      this.processor = await t.AutoProcessor.from_pretrained(this.spec.model);
      this.vision = await t.CLIPVisionModelWithProjection.from_pretrained(this.spec.model, {
        quantized: false,
      });
    }
  }

  private async textParts() {
    if (!this.text) {
      const t = await transformersModule();
      this.tokenizer = await t.AutoTokenizer.from_pretrained(this.spec.model);
      this.text = await t.CLIPTextModelWithProjection.from_pretrained(this.spec.model, {
        quantized: false,
      });
    }
  }

  async embedImage(bytes: Uint8Array): Promise<Float32Array> {
    await this.visionParts();
    const t = await transformersModule();
    const image = await t.RawImage.fromBlob(new Blob([bytes as unknown as BlobPart]));
    const inputs = await this.processor(image);
    const { image_embeds } = await this.vision(inputs);
    return Float32Array.from(image_embeds.data);
  }

  async embedText(text: string): Promise<Float32Array> {
    await this.textParts();
    const inputs = this.tokenizer([text], { padding: true, truncation: true });
    const { text_embeds } = await this.text(inputs);
    return Float32Array.from(text_embeds.data);
  }
}

class DinoEncoder implements Encoder {
  readonly dim: number;
  private extractor: any;

  constructor(readonly id: string, private readonly spec: ClipSpec) {
    this.dim = spec.dim;
  }

  async embedImage(bytes: Uint8Array): Promise<Float32Array> {
    if (!this.extractor) {
      const t = await transformersModule();
      this.extractor = await t.pipeline("image-feature-extraction", this.spec.model, {
        quantized: false,
      });
    }
    const t = await transformersModule();
    const image = await t.RawImage.fromBlob(new Blob([bytes as unknown as BlobPart]));
    const output = await this.extractor(image, { pooling: "cls" });
    return Float32Array.from(output.data);
  }

  async embedText(): Promise<Float32Array> {
    throw new ConfigError(`${this.id} has no text tower; use a CLIP encoder for prototypes`);
  }
}

export function getEncoder(id: string): Encoder {
  const hashMatch = /^hash-(\d+)$/.exec(id);
  if (hashMatch) {
    const dim = Number(hashMatch[1]);
    if (dim < 1) throw new ConfigError(`hash encoder dimension must be >= 1, got ${dim}`);
    return new HashEncoder(id, dim);
  }
  if (id in CLIP_MODELS) return new ClipEncoder(id, CLIP_MODELS[id]);
  if (id in DINO_MODELS) return new DinoEncoder(id, DINO_MODELS[id]);
  throw new ConfigError(
    `unknown encoder ${id}; known: ${[...Object.keys(CLIP_MODELS), ...Object.keys(DINO_MODELS)].join(", ")}, hash-<dim>`,
  );
}
