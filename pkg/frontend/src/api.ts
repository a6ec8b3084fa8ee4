/**
 * Thin fetch client for the tuning service.
 *
 * Long-running work (tune, pareto) goes through the job endpoints; the
 * client polls with exponential backoff until a job settles. The fetch and
 * sleep functions are injectable so tests can drive the polling loop
 * without timers or a network.
 */

import type {
  JobDoc,
  MonitorSeriesDoc,
  ParetoPointDoc,
  ParetoRequestDoc,
  RouteRequestDoc,
  RouteResponseDoc,
  TuneResultDoc,
  TuningRequestDoc,
} from "./types.js";

export class ApiError extends Error {
  constructor(message: string, readonly status: number = 0) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;
type SleepLike = (ms: number) => Promise<void>;

export interface PollOptions {
  initialDelayMs?: number;
  maxDelayMs?: number;
  factor?: number;
  maxPolls?: number;
}

const realSleep: SleepLike = (ms) => new Promise((res) => setTimeout(res, ms));

export class ApiClient {
  private readonly fetchFn: FetchLike;
  private readonly sleepFn: SleepLike;

  constructor(readonly baseUrl: string, fetchFn?: FetchLike, sleepFn?: SleepLike) {
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
    this.sleepFn = sleepFn ?? realSleep;
  }

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    let resp: Response;
    try {
      resp = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(`cannot reach ${this.baseUrl}: ${err}`);
    }
    let body: unknown = null;
    try {
      body = await resp.json();
    } catch {
      // non-JSON error page; fall through to the status check
    }
    if (!resp.ok) {
      const detail =
        body && typeof body === "object" && "detail" in body
          ? String((body as { detail: unknown }).detail)
          : `HTTP ${resp.status}`;
      throw new ApiError(detail, resp.status);
    }
    return body;
  }

  private post(path: string, payload: unknown): Promise<unknown> {
    return this.request(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  async tuneSync(req: TuningRequestDoc): Promise<TuneResultDoc> {
    const body = (await this.post("/tune", { request: req, sync: true })) as {
      result: TuneResultDoc;
    };
    return body.result;
  }

  async tuneJob(req: TuningRequestDoc): Promise<string> {
    const body = (await this.post("/tune", { request: req })) as { job_id: string };
    return body.job_id;
  }

  async paretoJob(req: ParetoRequestDoc): Promise<string> {
    const body = (await this.post("/pareto", req)) as { job_id: string };
    return body.job_id;
  }

  job(jobId: string): Promise<JobDoc> {
    return this.request(`/jobs/${jobId}`) as Promise<JobDoc>;
  }

  cancelJob(jobId: string): Promise<JobDoc> {
    return this.request(`/jobs/${jobId}/cancel`, { method: "POST" }) as Promise<JobDoc>;
  }

  /** Poll a job until it settles, doubling the delay up to a ceiling. */
  async waitForJob(jobId: string, opts: PollOptions = {}): Promise<JobDoc> {
    const initial = opts.initialDelayMs ?? 200;
    const max = opts.maxDelayMs ?? 5000;
    const factor = opts.factor ?? 2;
    const maxPolls = opts.maxPolls ?? 600;
    let delay = initial;
    for (let poll = 0; poll < maxPolls; poll++) {
      const job = await this.job(jobId);
      if (job.status === "done") return job;
      if (job.status === "failed") {
        throw new ApiError(job.error ?? "job failed");
      }
      if (job.status === "cancelled") {
        throw new ApiError(`job ${jobId} was cancelled`);
      }
      await this.sleepFn(delay);
      delay = Math.min(delay * factor, max);
    }
    throw new ApiError(`job ${jobId} did not settle after ${maxPolls} polls`);
  }

  /** Submit a frontier job and poll it to completion. */
  async runPareto(req: ParetoRequestDoc, opts?: PollOptions): Promise<ParetoPointDoc[]> {
    const jobId = await this.paretoJob(req);
    const job = await this.waitForJob(jobId, opts);
    const result = job.result as { points: ParetoPointDoc[] };
    return result.points;
  }

  route(req: RouteRequestDoc): Promise<RouteResponseDoc> {
    return this.post("/route", req) as Promise<RouteResponseDoc>;
  }

  monitorSeries(): Promise<MonitorSeriesDoc> {
    return this.request("/monitor/series") as Promise<MonitorSeriesDoc>;
  }

  sessions(): Promise<{ sessions: JobDoc[] }> {
    return this.request("/sessions") as Promise<{ sessions: JobDoc[] }>;
  }
}
