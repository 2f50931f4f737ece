#!/usr/bin/env node
/**
 * extract images     --root DIR --encoder ID --out FILE [--tag TAG]
 * extract prototypes --classes FILE --encoder ID --templates ID --out FILE [--tag TAG]
 */

import { parseArgs } from "node:util";

import { getEncoder } from "./encoders.js";
import { extractImageFeatures } from "./images.js";
import { buildTextPrototypes, readClassFile } from "./prototypes.js";

function usage(): never {
  console.error(
    [
      "usage:",
      "  extract images --root DIR --encoder ID --out FILE [--tag TAG]",
      "  extract prototypes --classes FILE --encoder ID --templates ID --out FILE [--tag TAG]",
      "",
      "encoders: clip-vit-l-14-336, clip-vit-b-16, dinov2-vitl14, dinov2-vitb14, hash-<dim>",
      "template sets: single, ensemble-180",
    ].join("\n"),
  );
  process.exit(2);
}

function required(values: Record<string, string | undefined>, key: string): string {
  const value = values[key];
  if (!value) {
    console.error(`error: missing --${key}`);
    usage();
  }
  return value;
}

export async function main(argv: string[]): Promise<number> {
  const [command, ...rest] = argv;
  if (command !== "images" && command !== "prototypes") usage();
  const { values } = parseArgs({
    args: rest,
    options: {
      root: { type: "string" },
      classes: { type: "string" },
      encoder: { type: "string" },
      templates: { type: "string" },
      out: { type: "string" },
      tag: { type: "string" },
    },
  });
  const encoder = getEncoder(required(values, "encoder"));
  const outPath = required(values, "out");
  if (command === "images") {
    await extractImageFeatures({
      root: required(values, "root"),
      encoder,
      outPath,
      sourceTag: values.tag,
    });
  } else {
    await buildTextPrototypes({
      classNames: readClassFile(required(values, "classes")),
      encoder,
      templateSet: required(values, "templates"),
      outPath,
      sourceTag: values.tag,
    });
  }
  console.log(`wrote ${outPath}`);
  return 0;
}

const invokedDirectly =
  process.argv[1] && import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  main(process.argv.slice(2))
    .then((code) => process.exit(code))
    .catch((err) => {
      console.error(`error: ${err.message}`);
      process.exit(2);
    });
}
