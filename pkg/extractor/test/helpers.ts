import { execFileSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

/** Load a container through the consumer toolkit's Python loader. */
export function loadThroughPython(containerPath: string): {
  n: number;
  d: number;
  nClasses: number;
  labels: number[];
} {
  const script = [
    "import sys",
    "from unida import load_feature_set",
    "fs = load_feature_set(sys.argv[1])",
    "print(fs.n, fs.dim, len(fs.class_names))",
    "print(','.join(str(int(v)) for v in fs.labels))",
  ].join("\n");
  const output = execFileSync("python3", ["-c", script, containerPath], {
    encoding: "utf-8",
  });
  const [head, labelLine] = output.trim().split("\n");
  const [n, d, nClasses] = head.split(" ").map(Number);
  return { n, d, nClasses, labels: labelLine.split(",").map(Number) };
}

export function makeImageTree(classes: Record<string, number>, seed = 1): string {
  const root = fs.mkdtempSync(path.join(os.tmpdir(), "extractor-"));
  let counter = seed;
  for (const [className, count] of Object.entries(classes)) {
    const dir = path.join(root, className);
    fs.mkdirSync(dir);
    for (let i = 0; i < count; i++) {
      // deterministic fake image bytes; the hash encoder consumes them as-is
      const bytes = Buffer.alloc(128);
      for (let j = 0; j < bytes.length; j++) {
        bytes[j] = (j * 31 + counter * 17) % 256;
      }
      counter += 1;
      fs.writeFileSync(path.join(dir, `img_${String(i).padStart(3, "0")}.bin`), bytes);
    }
  }
  return root;
}
