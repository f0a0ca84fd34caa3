/** Pure renderers: state in, HTML string out. No DOM access here, which
 * keeps every view testable in plain Node and makes rendered output a
 * deterministic function of state.
 */

import { CRYSTAL_IDS, displayName, labelById, labelByName } from "./labels";
import type { AppState } from "./state";
import { currentItem, effectiveStatus, visiblePages } from "./state";
import type { Strategy, TriageItem } from "./types";
import { SHORTCUT_LEGEND } from "./keyboard";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export const STRATEGY_DEPTH: Record<Strategy, number> = {
  top1: 1,
  top2: 2,
  top3: 3,
};

/** Whether the item belongs in the queue under a strategy: any of the n
 * highest-activation labels is a crystal class. Mirrors the service's flag.
 */
export function crystalFlagged(item: TriageItem, strategy: Strategy): boolean {
  const depth = STRATEGY_DEPTH[strategy];
  const precomputed = item.crystal_flag_topn[String(depth)];
  if (precomputed !== undefined) return precomputed;
  return item.ranked_labels.slice(0, depth).some((id) => CRYSTAL_IDS.has(id));
}

export interface ActivationBar {
  labelId: number;
  name: string;
  isCrystal: boolean;
  /** Softmax probability in percent, for the bar width. */
  pct: number;
  activation: number;
}

/** Top-3 labels in ranked order with softmax percentages for the bars. */
export function activationBars(item: TriageItem): ActivationBar[] {
  const max = Math.max(...item.activations);
  const exps = item.activations.map((a) => Math.exp(a - max));
  const sum = exps.reduce((s, e) => s + e, 0);
  return item.ranked_labels.slice(0, 3).map((id) => {
    const label = labelById(id);
    return {
      labelId: id,
      name: label.name,
      isCrystal: label.isCrystal,
      pct: (100 * (exps[id] ?? 0)) / sum,
      activation: item.activations[id] ?? 0,
    };
  });
}

function renderCard(
  state: AppState,
  item: TriageItem,
  flatIndex: number,
  imageUrl: (recordId: string) => string,
): string {
  const selected = state.cursor === flatIndex;
  const status = effectiveStatus(state, item);
  const flagged = crystalFlagged(item, state.strategy);
  const bars = activationBars(item)
    .map(
      (bar) => `
      <li class="activation${bar.isCrystal ? " crystal" : ""}">
        <span class="label-name">${escapeHtml(displayName(bar.name))}</span>
        ${bar.isCrystal ? '<span class="badge crystal-badge">crystal</span>' : ""}
        <span class="bar"><span class="fill" style="width:${bar.pct.toFixed(1)}%"></span></span>
        <span class="pct">${bar.pct.toFixed(1)}%</span>
      </li>`,
    )
    .join("");
  const pendingOp = state.pending.some((op) => op.recordId === item.record_id);
  return `
  <article class="card${selected ? " selected" : ""} status-${status}"
           data-record="${escapeHtml(item.record_id)}" data-index="${flatIndex}">
    <header>
      <span class="record-id">${escapeHtml(item.record_id.slice(0, 12))}</span>
      ${flagged ? '<span class="badge flag-badge">crystal flag</span>' : ""}
      <span class="status-chip">${escapeHtml(status)}${pendingOp ? " …" : ""}</span>
    </header>
    <img class="well-image${state.zoomed && selected ? " zoomed" : ""}"
         src="${escapeHtml(imageUrl(item.record_id))}"
         alt="trial drop ${escapeHtml(item.record_id.slice(0, 12))}">
    <ul class="activations">${bars}</ul>
    ${
      item.human_label
        ? `<footer>labeled <b>${escapeHtml(displayName(item.human_label))}</b>` +
          ` by ${escapeHtml(item.reviewer ?? "?")}</footer>`
        : ""
    }
  </article>`;
}

export function renderQueue(
  state: AppState,
  imageUrl: (recordId: string) => string,
): string {
  const pages = visiblePages(state);
  const count = pages.reduce((n, p) => n + p.length, 0);
  if (count === 0) {
    return `<div class="empty-state">queue is empty: nothing awaiting review
      under ${escapeHtml(state.strategy)}</div>`;
  }
  let flatIndex = 0;
  const sections = pages
    .map((items, pageNo) => {
      if (items.length === 0) return "";
      const cards = items
        .map((item) => renderCard(state, item, flatIndex++, imageUrl))
        .join("");
      return `<section class="page" data-page="${pageNo}">${cards}</section>`;
    })
    .join("");
  const more =
    state.total !== null && count < state.total
      ? `<div class="load-more">${state.total - count} more not yet loaded</div>`
      : "";
  return sections + more;
}

function fmtRatio(value: number | null | undefined): string {
  return value === null || value === undefined ? "–" : `${(100 * value).toFixed(1)}%`;
}

export function renderMetricsPanel(state: AppState): string {
  if (state.report === null) {
    const text = state.reportEmpty
      ? "no data: annotate an item to see live metrics"
      : "metrics not loaded";
    return `<aside class="metrics"><div class="no-data">${text}</div></aside>`;
  }
  const report = state.report;
  const topRows = [1, 2, 3]
    .map(
      (n) => `
      <tr><th>top-${n} accuracy</th>
          <td>${fmtRatio(report.top_n_accuracy[String(n)])}</td>
          <td class="missed">missed crystals: ${fmtRatio(
            report.missed_crystal_rate[String(n)],
          )}</td></tr>`,
    )
    .join("");
  const perClass = Object.entries(report.per_class_accuracy)
    .map(
      ([name, ratio]) => `
      <tr class="${CRYSTAL_IDS.has(labelIdSafe(name)) ? "crystal" : ""}">
        <th>${escapeHtml(displayName(name))}</th>
        <td>${fmtRatio(ratio)}</td>
        <td>auc ${fmtAuc(report.auc[name])}</td></tr>`,
    )
    .join("");
  return `
  <aside class="metrics">
    <h2>live metrics</h2>
    <table class="headline">${topRows}
      <tr><th>class average</th>
          <td colspan="2">${fmtRatio(report.class_average_accuracy)}</td></tr>
    </table>
    <table class="per-class">${perClass}</table>
  </aside>`;
}

function fmtAuc(value: number | null | undefined): string {
  return value === null || value === undefined ? "–" : value.toFixed(3);
}

function labelIdSafe(name: string): number {
  try {
    return labelByName(name).id;
  } catch {
    return -1;
  }
}

export function renderPicker(state: AppState): string {
  if (!state.pickerOpen) return "";
  const item = currentItem(state);
  if (!item) return "";
  const rows = Array.from({ length: 10 }, (_, id) => {
    const label = labelById(id);
    return `<li data-label="${id}">
      <kbd>${id}</kbd> ${escapeHtml(displayName(label.name))}
      ${label.isCrystal ? '<span class="badge crystal-badge">crystal</span>' : ""}
    </li>`;
  }).join("");
  return `<div class="picker" role="dialog">
    <h3>relabel ${escapeHtml(item.record_id.slice(0, 12))}</h3>
    <ul>${rows}</ul>
    <p>Esc to cancel</p>
  </div>`;
}

function renderToolbar(state: AppState): string {
  const buttons = (["top1", "top2", "top3"] as Strategy[])
    .map(
      (s) =>
        `<button class="strategy${s === state.strategy ? " active" : ""}"
                 data-strategy="${s}">${s}</button>`,
    )
    .join("");
  const legend = SHORTCUT_LEGEND.map(
    (s) => `<span class="hint"><kbd>${escapeHtml(s.keys)}</kbd> ${escapeHtml(s.does)}</span>`,
  ).join(" ");
  return `<nav class="toolbar">
    <span class="title">crystal triage queue</span>
    ${buttons}
    <span class="total">${state.total === null ? "" : `${state.total} flagged`}</span>
    <span class="reviewer">reviewer: ${escapeHtml(state.reviewer)}</span>
    <div class="legend">${legend}</div>
  </nav>`;
}

export function renderApp(
  state: AppState,
  imageUrl: (recordId: string) => string,
): string {
  const banner = state.banner
    ? `<div class="banner">${escapeHtml(state.banner)}</div>`
    : "";
  return `${banner}${renderToolbar(state)}
  <main>
    <div class="queue">${renderQueue(state, imageUrl)}</div>
    ${renderMetricsPanel(state)}
  </main>
  ${renderPicker(state)}`;
}
