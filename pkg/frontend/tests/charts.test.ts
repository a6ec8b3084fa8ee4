import { describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";
import { loadBars, paretoChart, seriesChart } from "../src/charts.js";
import type { MonitorSeriesDoc, ParetoPointDoc } from "../src/types.js";

function fixture<T = any>(name: string): T {
  const url = new URL(`./fixtures/${name}`, import.meta.url);
  return JSON.parse(readFileSync(url, "utf-8")) as T;
}

function attr(svg: string, element: string, name: string): string[] {
  const out: string[] = [];
  const re = new RegExp(`<${element}[^>]*\\b${name}="([^"]*)"`, "g");
  let m: RegExpExecArray | null;
  while ((m = re.exec(svg)) !== null) out.push(m[1]);
  return out;
}

describe("seriesChart", () => {
  const doc = fixture<MonitorSeriesDoc>("monitor_series.json");

  it("renders one polyline vertex per observed statement", () => {
    const svg = seriesChart(doc);
    expect(attr(svg, "polyline", "data-points")).toEqual(["600"]);
    const pts = attr(svg, "polyline", "points")[0].split(" ");
    expect(pts).toHaveLength(600);
    for (const pair of pts) {
      const [x, y] = pair.split(",").map(Number);
      expect(Number.isFinite(x)).toBe(true);
      expect(Number.isFinite(y)).toBe(true);
      expect(x).toBeGreaterThanOrEqual(0);
      expect(x).toBeLessThanOrEqual(960);
      expect(y).toBeGreaterThanOrEqual(0);
      expect(y).toBeLessThanOrEqual(280);
    }
  });

  it("marks the redeploy threshold with a dashed line", () => {
    const svg = seriesChart(doc);
    expect(svg).toContain('class="threshold-line"');
    expect(svg).toContain("stroke-dasharray");
    expect(attr(svg, "line", "data-threshold")).toEqual(["0.6"]);
    expect(svg).toContain("redeploy threshold 0.6");
  });

  it("handles an empty series without blowing up", () => {
    const svg = seriesChart({ ...doc, series: [] });
    expect(svg).toContain("no observations yet");
  });
});

describe("paretoChart", () => {
  const points = fixture<{ points: ParetoPointDoc[] }>("pareto_points.json").points;

  it("draws one curve per replica count", () => {
    const svg = paretoChart(points);
    expect(attr(svg, "polyline", "data-n").sort()).toEqual(["2", "3", "4"]);
  });

  it("renders every point as a clickable circle carrying its numbers", () => {
    const svg = paretoChart(points);
    const costs = attr(svg, "circle", "data-cost").map(Number).sort((a, b) => a - b);
    expect(costs).toHaveLength(18);
    const expected = points.map((p) => p.cost).sort((a, b) => a - b);
    expect(costs).toEqual(expected);
    expect(attr(svg, "circle", "data-budget").map(Number)).toContain(7);
    expect(svg).toContain('class="pareto-point"');
    expect(svg).toContain(">N=4<");
  });

  it("leaves infeasible points off the chart", () => {
    const withBad = points.concat([
      { ...points[0], fraction: 0.99, budget: 99, cost: Number.POSITIVE_INFINITY, status: "infeasible" },
    ]);
    const svg = paretoChart(withBad);
    expect(attr(svg, "circle", "data-cost")).toHaveLength(18);
    expect(svg).not.toContain("Infinity");
  });
});

describe("loadBars", () => {
  it("scales bar widths by the reported loads", () => {
    const svg = loadBars([34.0, 16.0]);
    const widths = attr(svg, "rect", "width").map(Number);
    expect(widths).toHaveLength(2);
    expect(widths[0]).toBeGreaterThan(widths[1]);
    expect(widths[0] / widths[1]).toBeCloseTo(34 / 16, 1);
    expect(attr(svg, "rect", "data-load")).toEqual(["34", "16"]);
    expect(svg).toContain(">34<");
    expect(svg).toContain(">16<");
  });
});
