/**
 * SVG builders for the console views. Pure string output with no DOM
 * dependency, so the same code runs under tests and in the browser.
 *
 * Everything plotted here is a server-reported number; the functions only
 * scale values into pixel coordinates.
 */

import type { MonitorSeriesDoc, ParetoPointDoc } from "./types.js";

const PALETTE = ["#2563eb", "#dc2626", "#059669", "#d97706", "#7c3aed", "#0891b2"];
const AXIS = "#9ca3af";
const GRID = "#e5e7eb";
const TEXT = "#374151";

export function fmt(v: number): string {
  if (!Number.isFinite(v)) return String(v);
  if (Math.abs(v - Math.round(v)) < 1e-9) return String(Math.round(v));
  return String(Number(v.toFixed(4)));
}

function ticks(lo: number, hi: number, count: number): number[] {
  if (!(hi > lo)) return [lo];
  const raw = (hi - lo) / Math.max(1, count);
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const step = (norm >= 5 ? 5 : norm >= 2 ? 2 : 1) * mag;
  const out: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
    out.push(Number(v.toFixed(12)));
  }
  return out;
}

interface Frame {
  width: number;
  height: number;
  left: number;
  right: number;
  top: number;
  bottom: number;
}

function axes(
  frame: Frame,
  xlo: number,
  xhi: number,
  ylo: number,
  yhi: number,
  xLabel: string,
  yLabel: string,
): { body: string; x: (v: number) => number; y: (v: number) => number } {
  const plotW = frame.width - frame.left - frame.right;
  const plotH = frame.height - frame.top - frame.bottom;
  const x = (v: number) => frame.left + ((v - xlo) / (xhi - xlo || 1)) * plotW;
  const y = (v: number) => frame.top + (1 - (v - ylo) / (yhi - ylo || 1)) * plotH;
  const parts: string[] = [];
  for (const t of ticks(ylo, yhi, 5)) {
    const py = y(t);
    parts.push(
      `<line x1="${frame.left}" y1="${py.toFixed(1)}" x2="${frame.width - frame.right}" ` +
        `y2="${py.toFixed(1)}" stroke="${GRID}"/>`,
      `<text x="${frame.left - 6}" y="${(py + 4).toFixed(1)}" text-anchor="end" ` +
        `font-size="11" fill="${TEXT}">${fmt(t)}</text>`,
    );
  }
  for (const t of ticks(xlo, xhi, 6)) {
    const px = x(t);
    parts.push(
      `<line x1="${px.toFixed(1)}" y1="${frame.height - frame.bottom}" x2="${px.toFixed(1)}" ` +
        `y2="${frame.height - frame.bottom + 4}" stroke="${AXIS}"/>`,
      `<text x="${px.toFixed(1)}" y="${frame.height - frame.bottom + 16}" text-anchor="middle" ` +
        `font-size="11" fill="${TEXT}">${fmt(t)}</text>`,
    );
  }
  parts.push(
    `<line x1="${frame.left}" y1="${frame.top}" x2="${frame.left}" ` +
      `y2="${frame.height - frame.bottom}" stroke="${AXIS}"/>`,
    `<line x1="${frame.left}" y1="${frame.height - frame.bottom}" ` +
      `x2="${frame.width - frame.right}" y2="${frame.height - frame.bottom}" stroke="${AXIS}"/>`,
    `<text x="${(frame.left + frame.width - frame.right) / 2}" y="${frame.height - 4}" ` +
      `text-anchor="middle" font-size="11" fill="${TEXT}">${xLabel}</text>`,
    `<text x="12" y="${(frame.top + frame.height - frame.bottom) / 2}" font-size="11" ` +
      `fill="${TEXT}" transform="rotate(-90 12 ${(frame.top + frame.height - frame.bottom) / 2})" ` +
      `text-anchor="middle">${yLabel}</text>`,
  );
  return { body: parts.join("\n"), x, y };
}

/**
 * Improvement-per-statement line for a monitor session, with a dashed
 * horizontal marker at the redeploy threshold.
 */
export function seriesChart(doc: MonitorSeriesDoc, width = 960, height = 280): string {
  const frame: Frame = { width, height, left: 52, right: 20, top: 14, bottom: 34 };
  const entries = doc.series;
  if (entries.length === 0) {
    return `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}">` +
      `<text x="${width / 2}" y="${height / 2}" text-anchor="middle" fill="${TEXT}">` +
      `no observations yet</text></svg>`;
  }
  const xlo = entries[0].statement_index;
  const xhi = entries[entries.length - 1].statement_index;
  const maxImp = Math.max(...entries.map((e) => e.improvement));
  const yhi = Math.max(1, maxImp * 1.05, doc.improvement_threshold * 1.25);
  const ax = axes(frame, xlo, xhi, 0, yhi, "statement", "improvement");
  const pts = entries
    .map((e) => `${ax.x(e.statement_index).toFixed(1)},${ax.y(e.improvement).toFixed(1)}`)
    .join(" ");
  const ty = ax.y(doc.improvement_threshold);
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}">`,
    ax.body,
    `<polyline class="series-line" data-points="${entries.length}" points="${pts}" ` +
      `fill="none" stroke="${PALETTE[0]}" stroke-width="1.5"/>`,
    `<line class="threshold-line" data-threshold="${doc.improvement_threshold}" ` +
      `x1="${frame.left}" y1="${ty.toFixed(1)}" x2="${width - frame.right}" ` +
      `y2="${ty.toFixed(1)}" stroke="${PALETTE[1]}" stroke-dasharray="6 4"/>`,
    `<text x="${width - frame.right - 4}" y="${(ty - 5).toFixed(1)}" text-anchor="end" ` +
      `font-size="11" fill="${PALETTE[1]}">redeploy threshold ${fmt(doc.improvement_threshold)}</text>`,
    `</svg>`,
  ].join("\n");
}

/**
 * Cost versus materialization budget, one polyline per replica count.
 * Points with non-finite cost (infeasible solves) are left off the chart.
 */
export function paretoChart(points: ParetoPointDoc[], width = 760, height = 320): string {
  const frame: Frame = { width, height, left: 58, right: 24, top: 18, bottom: 36 };
  const finite = points.filter((p) => Number.isFinite(p.cost));
  if (finite.length === 0) {
    return `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}">` +
      `<text x="${width / 2}" y="${height / 2}" text-anchor="middle" fill="${TEXT}">` +
      `no feasible points</text></svg>`;
  }
  const budgets = finite.map((p) => p.budget);
  const costs = finite.map((p) => p.cost);
  const xlo = Math.min(...budgets);
  const xhi = Math.max(...budgets);
  const span = Math.max(...costs) - Math.min(...costs);
  const ylo = Math.max(0, Math.min(...costs) - span * 0.05);
  const yhi = Math.max(...costs) + span * 0.05;
  const ax = axes(frame, xlo, xhi, ylo, yhi, "materialization budget", "workload cost");

  const byN = new Map<number, ParetoPointDoc[]>();
  for (const p of finite) {
    const group = byN.get(p.replica_count) ?? [];
    group.push(p);
    byN.set(p.replica_count, group);
  }
  const ns = [...byN.keys()].sort((a, b) => a - b);
  const lines: string[] = [];
  const dots: string[] = [];
  const legend: string[] = [];
  ns.forEach((n, gi) => {
    const color = PALETTE[gi % PALETTE.length];
    const group = byN.get(n)!.slice().sort((a, b) => a.budget - b.budget);
    const pts = group
      .map((p) => `${ax.x(p.budget).toFixed(1)},${ax.y(p.cost).toFixed(1)}`)
      .join(" ");
    lines.push(
      `<polyline class="pareto-line" data-n="${n}" points="${pts}" fill="none" ` +
        `stroke="${color}" stroke-width="1.5"/>`,
    );
    for (const p of group) {
      dots.push(
        `<circle class="pareto-point" data-n="${p.replica_count}" ` +
          `data-multiplicity="${p.multiplicity}" data-fraction="${p.fraction}" ` +
          `data-budget="${p.budget}" data-cost="${p.cost}" ` +
          `cx="${ax.x(p.budget).toFixed(1)}" cy="${ax.y(p.cost).toFixed(1)}" r="5" ` +
          `fill="${color}" fill-opacity="0.85" stroke="white">` +
          `<title>N=${p.replica_count} budget ${fmt(p.budget)} cost ${fmt(p.cost)}</title>` +
          `</circle>`,
      );
    }
    const lx = width - frame.right - 64;
    const ly = frame.top + 8 + gi * 16;
    legend.push(
      `<rect x="${lx}" y="${ly - 9}" width="10" height="10" fill="${color}"/>`,
      `<text x="${lx + 14}" y="${ly}" font-size="11" fill="${TEXT}">N=${n}</text>`,
    );
  });
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}">`,
    ax.body,
    ...lines,
    ...dots,
    ...legend,
    `</svg>`,
  ].join("\n");
}

/** Horizontal bars of server-reported per-replica loads. */
export function loadBars(loads: number[], width = 420): string {
  const rowH = 24;
  const gap = 6;
  const labelW = 36;
  const valueW = 64;
  const height = loads.length * (rowH + gap) + gap;
  const maxLoad = Math.max(...loads, 1e-9);
  const barSpan = width - labelW - valueW;
  const rows = loads.map((load, i) => {
    const y = gap + i * (rowH + gap);
    const w = Math.max(1, (load / maxLoad) * barSpan);
    return (
      `<text x="${labelW - 6}" y="${y + rowH / 2 + 4}" text-anchor="end" font-size="12" ` +
        `fill="${TEXT}">R${i + 1}</text>` +
      `<rect class="load-bar" data-load="${load}" x="${labelW}" y="${y}" ` +
        `width="${w.toFixed(1)}" height="${rowH}" fill="${PALETTE[0]}" fill-opacity="0.8"/>` +
      `<text x="${labelW + w + 6}" y="${y + rowH / 2 + 4}" font-size="12" ` +
        `fill="${TEXT}">${fmt(load)}</text>`
    );
  });
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}">` +
    rows.join("") +
    `</svg>`
  );
}
