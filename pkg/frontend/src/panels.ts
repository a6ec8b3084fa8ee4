/**
 * HTML fragments for the result panes, plus the request builder that turns
 * a clicked frontier point back into the tuning request that produced it.
 */

import { fmt, loadBars } from "./charts.js";
import type {
  DesignDoc,
  ParetoPointDoc,
  RouteResponseDoc,
  TuneResultDoc,
  TuningRequestDoc,
  WorkloadDoc,
} from "./types.js";

export function escapeHtml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** A design with nothing materialized yet, used as the transition origin. */
export function emptyDesign(replicaCount: number): DesignDoc {
  return {
    replica_count: replicaCount,
    configs: Array.from({ length: replicaCount }, () => []),
    routing: { normal: {}, on_failure: {} },
  };
}

export interface PointRequestBase {
  spaceBudget?: number | null;
  current?: DesignDoc | null;
}

/**
 * Rebuild the tuning request behind one frontier point: same replica count
 * and multiplicity, the point's materialization budget over the same
 * transition origin, and an exact solve so the detail pane shows the very
 * design the frontier job priced.
 */
export function buildPointRequest(
  workload: WorkloadDoc,
  point: ParetoPointDoc,
  base: PointRequestBase = {},
): TuningRequestDoc {
  return {
    workload,
    replica_count: point.replica_count,
    multiplicity: point.multiplicity,
    failure_prob: 0.0,
    constraints: {
      space_budget: base.spaceBudget ?? null,
      materialization: {
        budget: point.budget,
        current: base.current ?? emptyDesign(point.replica_count),
      },
    },
    solver_controls: { gap_tolerance: 0.0 },
  };
}

export function pointDetail(point: ParetoPointDoc): string {
  return (
    `<dl class="point-detail">` +
    `<dt>replicas</dt><dd>${point.replica_count}</dd>` +
    `<dt>multiplicity</dt><dd>${point.multiplicity}</dd>` +
    `<dt>budget fraction</dt><dd>${fmt(point.fraction * 100)}%</dd>` +
    `<dt>budget</dt><dd>${fmt(point.budget)}</dd>` +
    `<dt>cost</dt><dd>${fmt(point.cost)}</dd>` +
    `<dt>status</dt><dd>${escapeHtml(point.status)}</dd>` +
    `</dl>`
  );
}

/** Replica-by-replica view of a tuning result, all numbers server-reported. */
export function designPanel(result: TuneResultDoc): string {
  const br = result.breakdown;
  const loads = br.per_replica_load;
  const rows = result.design.configs
    .map((config, i) => {
      const names = config.length
        ? config.map((a) => `<code>${escapeHtml(a)}</code>`).join(" ")
        : "<em>no indexes</em>";
      return (
        `<tr><td>R${i + 1}</td><td>${names}</td>` +
        `<td class="num">${fmt(loads[i] ?? 0)}</td></tr>`
      );
    })
    .join("");
  const spread =
    loads.length > 0
      ? `<p class="design-loads">per-replica load ${fmt(Math.min(...loads))} to ` +
        `${fmt(Math.max(...loads))}</p>`
      : "";
  return (
    `<div class="design-panel">` +
    `<p class="design-status">status <strong>${escapeHtml(result.status)}</strong>, ` +
    `cost <strong>${fmt(br.total)}</strong> ` +
    `(queries ${fmt(br.query_cost)}, updates ${fmt(br.update_cost)}), ` +
    `expected ${fmt(br.expected_total)}</p>` +
    `<table class="design-table"><thead>` +
    `<tr><th>replica</th><th>indexes</th><th>load</th></tr>` +
    `</thead><tbody>${rows}</tbody></table>` +
    loadBars(loads) +
    spread +
    `<p class="design-meta">solved in ${fmt(result.wall_time)}s, ` +
    `${result.nodes_explored} nodes, gap ${fmt(result.gap)}</p>` +
    `</div>`
  );
}

/** Routing decision for one query with the server's per-replica costs. */
export function routePanel(resp: RouteResponseDoc): string {
  const chosen = new Set(resp.replicas);
  const badges = resp.replicas
    .map((r) => `<span class="replica-badge" data-replica="${r}">R${r}</span>`)
    .join(" ");
  const replicaIds = Object.keys(resp.costs)
    .map((k) => Number(k))
    .sort((a, b) => a - b);
  const rows = replicaIds
    .map((r) => {
      const cls = chosen.has(r) ? ` class="chosen"` : "";
      return (
        `<tr${cls}><td>R${r}</td><td class="num">${fmt(resp.costs[String(r)])}</td>` +
        `<td>${chosen.has(r) ? "yes" : ""}</td></tr>`
      );
    })
    .join("");
  return (
    `<div class="route-panel">` +
    `<p>query <code>${escapeHtml(resp.query)}</code> routed to ${badges} ` +
    `<span class="badge-method">${escapeHtml(resp.method)}</span></p>` +
    `<table class="route-costs"><thead>` +
    `<tr><th>replica</th><th>cost</th><th>serves</th></tr>` +
    `</thead><tbody>${rows}</tbody></table>` +
    `</div>`
  );
}
