import { readFileSync } from "node:fs";
import { join } from "node:path";

import { createSseParser, ParsedFrame } from "../src/sse.js";
import { ChartSpec } from "../src/types.js";

export function fixtureText(name: string): string {
  // vitest runs from the frontend package root
  return readFileSync(join(process.cwd(), "tests", "fixtures", name), "utf-8");
}

export function salesFrames(): ParsedFrame[] {
  return createSseParser()(fixtureText("sales_stream.sse"));
}

export function chartFixtures(): Record<string, ChartSpec> {
  const charts: Record<string, ChartSpec> = {};
  for (const frame of salesFrames()) {
    if (frame.event === "chart") {
      const spec = frame.data as ChartSpec;
      charts[spec.chart_type] = spec;
    }
  }
  return charts;
}
