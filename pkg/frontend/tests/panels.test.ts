import { describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";
import {
  buildPointRequest,
  designPanel,
  emptyDesign,
  escapeHtml,
  pointDetail,
  routePanel,
} from "../src/panels.js";
import type { ParetoPointDoc, TuneResultDoc } from "../src/types.js";

function fixture<T = any>(name: string): T {
  const url = new URL(`./fixtures/${name}`, import.meta.url);
  return JSON.parse(readFileSync(url, "utf-8")) as T;
}

describe("buildPointRequest", () => {
  const points = fixture<{ points: ParetoPointDoc[] }>("pareto_points.json").points;
  const workload = fixture("route_roundtrip.json").workload;

  it("mirrors the request the frontier job solved for the clicked point", () => {
    const point = points.find((p) => p.replica_count === 3 && p.fraction === 0.5)!;
    const req = buildPointRequest(workload, point);

    expect(req.workload).toBe(workload);
    expect(req.replica_count).toBe(3);
    expect(req.multiplicity).toBe(1);
    expect(req.failure_prob).toBe(0);
    expect(req.solver_controls).toEqual({ gap_tolerance: 0.0 });
    expect(req.constraints?.space_budget).toBeNull();
    const mat = req.constraints?.materialization!;
    expect(mat.budget).toBe(point.budget);
    expect(mat.current).toEqual({
      replica_count: 3,
      configs: [[], [], []],
      routing: { normal: {}, on_failure: {} },
    });
  });

  it("keeps the space budget and transition origin when supplied", () => {
    const point = points[0];
    const current = emptyDesign(point.replica_count);
    current.configs[0] = ["I0"];
    const req = buildPointRequest(workload, point, { spaceBudget: 9, current });

    expect(req.constraints?.space_budget).toBe(9);
    expect(req.constraints?.materialization?.current).toBe(current);
  });
});

describe("emptyDesign", () => {
  it("builds a bare design with the requested replica count", () => {
    expect(emptyDesign(2)).toEqual({
      replica_count: 2,
      configs: [[], []],
      routing: { normal: {}, on_failure: {} },
    });
  });
});

describe("designPanel", () => {
  const result = fixture<{ result: TuneResultDoc }>("tune_result.json").result;

  it("lists each replica's indexes and server-reported loads", () => {
    const html = designPanel(result);
    expect(html).toContain("<strong>optimal</strong>");
    expect(html).toContain("cost <strong>50</strong>");
    expect(html).toContain("queries 40");
    expect(html).toContain("updates 10");
    for (const id of ["I0", "I1", "I2"]) {
      expect(html).toContain(`<code>${id}</code>`);
    }
    expect(html).toContain("R1");
    expect(html).toContain("R2");
    expect(html).toContain("per-replica load 16 to 34");
    expect(html.match(/class="load-bar"/g)).toHaveLength(2);
  });

  it("escapes index names", () => {
    const vandalized = {
      ...result,
      design: { ...result.design, configs: [["<img>"], []] },
    };
    const html = designPanel(vandalized);
    expect(html).not.toContain("<img>");
    expect(html).toContain("&lt;img&gt;");
  });
});

describe("routePanel", () => {
  const rr = fixture("route_roundtrip.json");

  it("displays exactly the replicas the service chose, matching the CLI", () => {
    const html = routePanel(rr.api_response);
    for (const r of rr.cli_reported_replicas) {
      expect(html).toContain(`data-replica="${r}"`);
    }
    // replica 2 serves nothing for this query, so no badge for it
    expect(html).not.toContain('data-replica="2"');
    expect(html.match(/class="replica-badge"/g)).toHaveLength(rr.cli_reported_replicas.length);
    expect(html).toContain("designed");
    expect(html).toContain("Q3");
  });

  it("tabulates the per-replica costs straight from the response", () => {
    const html = routePanel(rr.api_response);
    expect(html).toContain(">4<");
    expect(html).toContain(">6<");
    expect(html.match(/<tr class="chosen">/g)).toHaveLength(1);
  });
});

describe("pointDetail", () => {
  it("shows the point's own numbers", () => {
    const points = fixture<{ points: ParetoPointDoc[] }>("pareto_points.json").points;
    const point = points.find((p) => p.replica_count === 3 && p.fraction === 0.5)!;
    const html = pointDetail(point);
    expect(html).toContain(">50%<");
    expect(html).toContain(`>${point.budget}<`);
    expect(html).toContain(">53<");
    expect(html).toContain("optimal");
  });
});

describe("escapeHtml", () => {
  it("neutralizes markup metacharacters", () => {
    expect(escapeHtml('<b a="x">&')).toBe("&lt;b a=&quot;x&quot;&gt;&amp;");
  });
});
