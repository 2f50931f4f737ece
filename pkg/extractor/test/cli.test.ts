import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { describe, expect, it } from "vitest";

import { main } from "../src/cli.js";
import { readContainer } from "../src/container.js";
import { makeImageTree } from "./helpers.js";

describe("cli", () => {
  it("extracts images end to end", async () => {
    const root = makeImageTree({ pen: 2, cup: 2 });
    const out = path.join(fs.mkdtempSync(path.join(os.tmpdir(), "cli-")), "feat.udfs");
    const code = await main([
      "images", "--root", root, "--encoder", "hash-8", "--out", out, "--tag", "demo",
    ]);
    expect(code).toBe(0);
    const loaded = readContainer(out);
    expect(loaded.n).toBe(4);
    expect(loaded.metadata.source_tag).toBe("demo");
  });

  it("builds prototypes end to end", async () => {
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), "cli-"));
    const classFile = path.join(dir, "classes.txt");
    fs.writeFileSync(classFile, "pen\ncup\n");
    const out = path.join(dir, "protos.udfs");
    const code = await main([
      "prototypes", "--classes", classFile, "--encoder", "hash-8",
      "--templates", "single", "--out", out,
    ]);
    expect(code).toBe(0);
    expect(readContainer(out).n).toBe(2);
  });
});
