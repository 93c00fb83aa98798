import { createHash } from "node:crypto";
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const here = dirname(fileURLToPath(import.meta.url));

export function readFixture(relative: string): string {
  return readFileSync(join(here, "fixtures", relative), { encoding: "utf-8" });
}

export function sha256(text: string): string {
  return createHash("sha256").update(text, "utf-8").digest("hex");
}

/** Extract attribute values from every occurrence of an element in an SVG string. */
export function extractAttr(svg: string, element: string, attr: string): string[] {
  const out: string[] = [];
  const elementRe = new RegExp(`<${element}\\b[^>]*>`, "g");
  const attrRe = new RegExp(`\\b${attr}="([^"]*)"`);
  for (const match of svg.match(elementRe) ?? []) {
    const hit = attrRe.exec(match);
    if (hit !== null) out.push(hit[1]);
  }
  return out;
}

/** Full tags of every occurrence of an element, for multi-attribute inspection. */
export function extractTags(svg: string, element: string): string[] {
  return svg.match(new RegExp(`<${element}\\b[^>]*>`, "g")) ?? [];
}
