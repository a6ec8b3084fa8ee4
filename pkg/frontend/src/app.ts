/**
 * Browser entry point: wires the tabs, forms, and polling loops to the
 * tuning service. This is the only module that touches the DOM.
 */

import { ApiClient, ApiError } from "./api.js";
import { paretoChart, seriesChart, fmt } from "./charts.js";
import { buildPointRequest, designPanel, pointDetail, routePanel } from "./panels.js";
import type { DesignDoc, ParetoPointDoc, WorkloadDoc } from "./types.js";

interface ConsoleState {
  workload: WorkloadDoc | null;
  design: DesignDoc | null;
  points: ParetoPointDoc[];
  spaceBudget: number | null;
  paretoJobId: string | null;
}

const state: ConsoleState = {
  workload: null,
  design: null,
  points: [],
  spaceBudget: null,
  paretoJobId: null,
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function client(): ApiClient {
  const url = el<HTMLInputElement>("base-url").value.trim().replace(/\/+$/, "");
  return new ApiClient(url || "http://localhost:8000");
}

function setStatus(text: string, kind: "ok" | "busy" | "err" = "ok"): void {
  const bar = el<HTMLElement>("status-bar");
  bar.textContent = text;
  bar.className = `status ${kind}`;
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) return err.message;
  return String(err);
}

function requireWorkload(): WorkloadDoc {
  if (!state.workload) throw new ApiError("load a workload file first");
  return state.workload;
}

// ---- workload loading ----

function loadWorkload(): void {
  try {
    const doc = JSON.parse(el<HTMLTextAreaElement>("workload-json").value) as WorkloadDoc;
    if (!Array.isArray(doc.queries) || !Array.isArray(doc.indexes)) {
      throw new Error("document has no queries/indexes arrays");
    }
    state.workload = doc;
    const select = el<HTMLSelectElement>("route-query");
    select.innerHTML = doc.queries
      .map((q) => `<option value="${String(q.id)}">${String(q.id)}</option>`)
      .join("");
    el<HTMLElement>("workload-summary").textContent =
      `${doc.queries.length} queries, ${doc.updates?.length ?? 0} updates, ` +
      `${doc.indexes.length} candidate indexes`;
    setStatus("workload loaded");
  } catch (err) {
    setStatus(`workload not loaded: ${describeError(err)}`, "err");
  }
}

function readWorkloadFile(input: HTMLInputElement): void {
  const file = input.files && input.files[0];
  if (!file) return;
  const reader = new FileReader();
  reader.onload = () => {
    el<HTMLTextAreaElement>("workload-json").value = String(reader.result);
    loadWorkload();
  };
  reader.readAsText(file);
}

// ---- tabs ----

function showTab(name: string): void {
  for (const pane of document.querySelectorAll<HTMLElement>(".pane")) {
    pane.hidden = pane.dataset.pane !== name;
  }
  for (const btn of document.querySelectorAll<HTMLElement>("nav button")) {
    btn.classList.toggle("active", btn.dataset.tab === name);
  }
}

// ---- monitor ----

let monitorTimer: number | undefined;
let monitorDelay = 2000;

async function refreshMonitor(): Promise<void> {
  try {
    const doc = await client().monitorSeries();
    el<HTMLElement>("monitor-chart").innerHTML = seriesChart(doc);
    el<HTMLElement>("monitor-summary").textContent =
      `${doc.observed} statements observed, ${doc.redeploy_count} redeploys, ` +
      `window ${doc.window_size}, threshold ${fmt(doc.improvement_threshold)}`;
    monitorDelay = 2000;
    setStatus("monitor series refreshed");
  } catch (err) {
    // back off while the session is missing or the service is down
    monitorDelay = Math.min(monitorDelay * 2, 30000);
    if (err instanceof ApiError && err.status === 409) {
      el<HTMLElement>("monitor-summary").textContent =
        "no monitor session yet; start one with the replay tooling, then refresh";
      setStatus("monitor is not configured", "err");
    } else {
      setStatus(`monitor refresh failed: ${describeError(err)}`, "err");
    }
  }
}

function setMonitorAuto(on: boolean): void {
  if (monitorTimer !== undefined) {
    window.clearTimeout(monitorTimer);
    monitorTimer = undefined;
  }
  if (!on) return;
  const tick = async () => {
    await refreshMonitor();
    monitorTimer = window.setTimeout(tick, monitorDelay);
  };
  void tick();
}

// ---- pareto explorer ----

function parseNumberList(raw: string): number[] {
  return raw
    .split(",")
    .map((s) => s.trim())
    .filter((s) => s.length > 0)
    .map((s) => Number(s));
}

async function runPareto(): Promise<void> {
  let workload: WorkloadDoc;
  try {
    workload = requireWorkload();
  } catch (err) {
    setStatus(describeError(err), "err");
    return;
  }
  const replicaCounts = parseNumberList(el<HTMLInputElement>("pareto-ns").value);
  const fractions = parseNumberList(el<HTMLInputElement>("pareto-fractions").value);
  const multiplicity = Number(el<HTMLInputElement>("pareto-m").value) || 1;
  const budgetRaw = el<HTMLInputElement>("pareto-space").value.trim();
  state.spaceBudget = budgetRaw ? Number(budgetRaw) : null;
  if (replicaCounts.length === 0 || replicaCounts.some((n) => !Number.isInteger(n) || n < 1)) {
    setStatus("replica counts must be positive integers", "err");
    return;
  }
  const api = client();
  setStatus("submitting frontier job", "busy");
  try {
    const jobId = await api.paretoJob({
      workload,
      replica_counts: replicaCounts,
      multiplicity,
      space_budget: state.spaceBudget,
      ...(fractions.length > 0 ? { fractions } : {}),
    });
    state.paretoJobId = jobId;
    setStatus(`frontier job ${jobId} running`, "busy");
    const job = await api.waitForJob(jobId);
    state.points = (job.result as { points: ParetoPointDoc[] }).points;
    el<HTMLElement>("pareto-chart").innerHTML = paretoChart(state.points);
    el<HTMLElement>("point-design").innerHTML =
      "<p>click a point to solve for its design</p>";
    setStatus(`frontier done: ${state.points.length} points`);
  } catch (err) {
    setStatus(`frontier failed: ${describeError(err)}`, "err");
  } finally {
    state.paretoJobId = null;
  }
}

async function cancelPareto(): Promise<void> {
  if (!state.paretoJobId) {
    setStatus("no frontier job running", "err");
    return;
  }
  try {
    await client().cancelJob(state.paretoJobId);
    setStatus("cancel requested");
  } catch (err) {
    setStatus(`cancel failed: ${describeError(err)}`, "err");
  }
}

async function inspectPoint(target: Element): Promise<void> {
  const n = Number(target.getAttribute("data-n"));
  const fraction = Number(target.getAttribute("data-fraction"));
  const point = state.points.find(
    (p) => p.replica_count === n && Math.abs(p.fraction - fraction) < 1e-12,
  );
  if (!point) return;
  const detail = el<HTMLElement>("point-design");
  detail.innerHTML = pointDetail(point) + "<p>solving for the design...</p>";
  try {
    const req = buildPointRequest(requireWorkload(), point, {
      spaceBudget: state.spaceBudget,
    });
    const result = await client().tuneSync(req);
    state.design = result.design;
    detail.innerHTML = pointDetail(point) + designPanel(result);
    setStatus(`point solved: cost ${fmt(result.breakdown.total)}; design saved for routing`);
  } catch (err) {
    detail.innerHTML = pointDetail(point);
    setStatus(`point solve failed: ${describeError(err)}`, "err");
  }
}

// ---- what-if routing ----

function currentDesign(): DesignDoc {
  const pasted = el<HTMLTextAreaElement>("route-design").value.trim();
  if (pasted) return JSON.parse(pasted) as DesignDoc;
  if (state.design) return state.design;
  throw new ApiError("no design available: tune a point first or paste a design document");
}

async function runRoute(): Promise<void> {
  try {
    const workload = requireWorkload();
    const design = currentDesign();
    const queryId = el<HTMLSelectElement>("route-query").value;
    if (!queryId) throw new ApiError("pick a query");
    const resp = await client().route({
      workload,
      design,
      query_id: queryId,
      multiplicity: Number(el<HTMLInputElement>("route-m").value) || 1,
      similarity: el<HTMLInputElement>("route-similarity").checked,
    });
    el<HTMLElement>("route-result").innerHTML = routePanel(resp);
    setStatus(`query ${resp.query} routed via ${resp.method}`);
  } catch (err) {
    setStatus(`routing failed: ${describeError(err)}`, "err");
  }
}

// ---- wiring ----

function init(): void {
  el<HTMLButtonElement>("workload-load").addEventListener("click", loadWorkload);
  el<HTMLInputElement>("workload-file").addEventListener("change", (ev) =>
    readWorkloadFile(ev.target as HTMLInputElement),
  );
  for (const btn of document.querySelectorAll<HTMLElement>("nav button")) {
    btn.addEventListener("click", () => showTab(btn.dataset.tab ?? "monitor"));
  }
  el<HTMLButtonElement>("monitor-refresh").addEventListener("click", () => void refreshMonitor());
  el<HTMLInputElement>("monitor-auto").addEventListener("change", (ev) =>
    setMonitorAuto((ev.target as HTMLInputElement).checked),
  );
  el<HTMLButtonElement>("pareto-run").addEventListener("click", () => void runPareto());
  el<HTMLButtonElement>("pareto-cancel").addEventListener("click", () => void cancelPareto());
  el<HTMLElement>("pareto-chart").addEventListener("click", (ev) => {
    const target = (ev.target as Element).closest(".pareto-point");
    if (target) void inspectPoint(target);
  });
  el<HTMLButtonElement>("route-run").addEventListener("click", () => void runRoute());
  showTab("monitor");
  setStatus("ready");
}

init();
