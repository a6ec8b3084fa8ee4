import { describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";
import { ApiClient, ApiError } from "../src/api.js";
import type { JobDoc, ParetoPointDoc } from "../src/types.js";

function fixture<T = any>(name: string): T {
  const url = new URL(`./fixtures/${name}`, import.meta.url);
  return JSON.parse(readFileSync(url, "utf-8")) as T;
}

interface Call {
  url: string;
  init?: RequestInit;
}

/** Fake fetch that replays canned JSON bodies and records every call. */
function fakeFetch(responses: Array<{ body: unknown; status?: number }>) {
  const calls: Call[] = [];
  let i = 0;
  const fn = async (url: string, init?: RequestInit): Promise<Response> => {
    calls.push({ url, init });
    const next = responses[Math.min(i, responses.length - 1)];
    i += 1;
    return new Response(JSON.stringify(next.body), {
      status: next.status ?? 200,
      headers: { "content-type": "application/json" },
    });
  };
  return { fn, calls };
}

function fakeSleep() {
  const delays: number[] = [];
  const fn = async (ms: number) => {
    delays.push(ms);
  };
  return { fn, delays };
}

function jobDoc(status: JobDoc["status"], extra: Partial<JobDoc> = {}): JobDoc {
  return {
    job_id: "j1",
    kind: "pareto",
    status,
    submitted_at: 0,
    finished_at: null,
    result: null,
    error: null,
    ...extra,
  };
}

describe("ApiClient", () => {
  it("posts a sync tune request and unwraps the result document", async () => {
    const tuned = fixture("tune_result.json");
    const { fn, calls } = fakeFetch([{ body: tuned }]);
    const client = new ApiClient("http://svc:8000", fn);
    const rr = fixture("route_roundtrip.json");

    const result = await client.tuneSync({
      workload: rr.workload,
      replica_count: 2,
      multiplicity: 1,
    });

    expect(calls).toHaveLength(1);
    expect(calls[0].url).toBe("http://svc:8000/tune");
    const sent = JSON.parse(String(calls[0].init?.body));
    expect(sent.sync).toBe(true);
    expect(sent.request.replica_count).toBe(2);
    expect(result.status).toBe("optimal");
    expect(result.breakdown.total).toBe(50.0);
    expect(result.breakdown.per_replica_load).toEqual([34.0, 16.0]);
  });

  it("polls a job with exponential backoff until it is done", async () => {
    const points = fixture<{ points: ParetoPointDoc[] }>("pareto_points.json");
    const { fn, calls } = fakeFetch([
      { body: jobDoc("queued") },
      { body: jobDoc("running") },
      { body: jobDoc("running") },
      { body: jobDoc("running") },
      { body: jobDoc("done", { result: points, finished_at: 1 }) },
    ]);
    const { fn: sleep, delays } = fakeSleep();
    const client = new ApiClient("http://svc:8000", fn, sleep);

    const job = await client.waitForJob("j1", { initialDelayMs: 200, maxDelayMs: 500 });

    expect(calls).toHaveLength(5);
    expect(calls.every((c) => c.url === "http://svc:8000/jobs/j1")).toBe(true);
    // doubles from the initial delay and is capped at the ceiling
    expect(delays).toEqual([200, 400, 500, 500]);
    expect(job.status).toBe("done");
    expect((job.result as { points: unknown[] }).points).toHaveLength(18);
  });

  it("submits a frontier request and returns the fetched points", async () => {
    const points = fixture<{ points: ParetoPointDoc[] }>("pareto_points.json");
    const rr = fixture("route_roundtrip.json");
    const { fn, calls } = fakeFetch([
      { body: { job_id: "j7", status: "queued" } },
      { body: jobDoc("done", { job_id: "j7", result: points }) },
    ]);
    const client = new ApiClient("http://svc:8000", fn, fakeSleep().fn);

    const got = await client.runPareto({
      workload: rr.workload,
      replica_counts: [2, 3, 4],
      multiplicity: 1,
    });

    expect(calls[0].url).toBe("http://svc:8000/pareto");
    const sent = JSON.parse(String(calls[0].init?.body));
    expect(sent.replica_counts).toEqual([2, 3, 4]);
    expect(calls[1].url).toBe("http://svc:8000/jobs/j7");
    expect(got).toHaveLength(18);
    expect(new Set(got.map((p) => p.replica_count))).toEqual(new Set([2, 3, 4]));
  });

  it("surfaces the server error when a job fails", async () => {
    const { fn } = fakeFetch([
      { body: jobDoc("running") },
      { body: jobDoc("failed", { error: "infeasible: space budget excludes every index" }) },
    ]);
    const client = new ApiClient("http://svc:8000", fn, fakeSleep().fn);

    await expect(client.waitForJob("j1")).rejects.toThrow(/space budget excludes/);
  });

  it("turns a non-2xx response into an ApiError with the detail text", async () => {
    const { fn } = fakeFetch([
      { body: { detail: "malformed request: missing replica_count" }, status: 422 },
    ]);
    const client = new ApiClient("http://svc:8000", fn);
    const rr = fixture("route_roundtrip.json");

    const attempt = client.tuneSync({ workload: rr.workload, replica_count: 0, multiplicity: 1 });
    await expect(attempt).rejects.toThrowError(ApiError);
    await expect(attempt).rejects.toThrow(/missing replica_count/);
  });

  it("round-trips a routing question and reports the same replicas as the CLI", async () => {
    const rr = fixture("route_roundtrip.json");
    const { fn, calls } = fakeFetch([{ body: rr.api_response }]);
    const client = new ApiClient("http://svc:8000", fn);

    const resp = await client.route({
      workload: rr.workload,
      design: rr.design,
      query_id: "Q3",
    });

    const sent = JSON.parse(String(calls[0].init?.body));
    expect(sent.query_id).toBe("Q3");
    expect(sent.design).toEqual(rr.design);
    expect(resp.method).toBe("designed");
    expect(resp.replicas).toEqual(rr.cli_reported_replicas);
  });
});
