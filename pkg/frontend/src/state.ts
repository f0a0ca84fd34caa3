/** Pure UI state: a fold over service responses and local pending operations.
 *
 * Every change to the screen is an event through `reduce`; replaying the
 * same event sequence reproduces the same state (and therefore the same
 * rendered markup), which is what makes the workflow testable without a
 * browser.
 */

import type {
  Action,
  ItemStatus,
  LiveReport,
  QueueResponse,
  Strategy,
  TriageItem,
} from "./types";
import { STATUS_BY_ACTION } from "./types";

export interface PendingOp {
  /** Idempotency key sent with the annotation; stable across resends. */
  key: string;
  recordId: string;
  action: Action;
  label: string | null;
}

export interface AppState {
  reviewer: string;
  sessionId: string;
  strategy: Strategy;
  statusFilter: ItemStatus | null;
  pageLimit: number;
  /** Raw queue responses in fetch order; never locally reordered. */
  pages: readonly QueueResponse[];
  total: number | null;
  /** Index into the deduplicated visible item list; null = nothing selected. */
  cursor: number | null;
  pickerOpen: boolean;
  zoomed: boolean;
  pending: readonly PendingOp[];
  /** Monotone counter feeding idempotency keys. */
  opSeq: number;
  report: LiveReport | null;
  /** True once the service has answered "no annotations yet". */
  reportEmpty: boolean;
  banner: string | null;
}

export type UiEvent =
  | { kind: "strategy_set"; strategy: Strategy }
  | { kind: "status_filter_set"; status: ItemStatus | null }
  | { kind: "page_loaded"; response: QueueResponse }
  | { kind: "queue_cleared" }
  | { kind: "cursor_moved"; delta: 1 | -1 }
  | { kind: "cursor_set"; index: number }
  | { kind: "picker_opened" }
  | { kind: "picker_closed" }
  | { kind: "zoom_toggled" }
  | { kind: "op_submitted"; op: PendingOp }
  | { kind: "op_acked"; key: string; item: TriageItem }
  | { kind: "op_rejected"; key: string; code: string; message: string }
  | { kind: "item_dropped"; recordId: string }
  | { kind: "report_loaded"; report: LiveReport }
  | { kind: "report_empty" }
  | { kind: "service_unreachable"; message: string }
  | { kind: "service_ok" };

export function initialState(options: {
  reviewer: string;
  sessionId: string;
  strategy?: Strategy;
  statusFilter?: ItemStatus | null;
  pageLimit?: number;
}): AppState {
  return {
    reviewer: options.reviewer,
    sessionId: options.sessionId,
    strategy: options.strategy ?? "top2",
    statusFilter: options.statusFilter === undefined ? "pending" : options.statusFilter,
    pageLimit: options.pageLimit ?? 10,
    pages: [],
    total: null,
    cursor: null,
    pickerOpen: false,
    zoomed: false,
    pending: [],
    opSeq: 0,
    report: null,
    reportEmpty: false,
    banner: null,
  };
}

/** Pages with cross-page repeats removed: an item never shows twice. */
export function visiblePages(state: AppState): TriageItem[][] {
  const seen = new Set<string>();
  return state.pages.map((page) =>
    page.items.filter((item) => {
      if (seen.has(item.record_id)) return false;
      seen.add(item.record_id);
      return true;
    }),
  );
}

export function flatItems(state: AppState): TriageItem[] {
  return visiblePages(state).flat();
}

export function currentItem(state: AppState): TriageItem | null {
  if (state.cursor === null) return null;
  return flatItems(state)[state.cursor] ?? null;
}

export function pendingOpFor(state: AppState, recordId: string): PendingOp | null {
  return state.pending.find((op) => op.recordId === recordId) ?? null;
}

/** Item status with the optimistic overlay from pending operations applied.
 * Removing a rejected operation is the rollback: the raw status shows again.
 */
export function effectiveStatus(state: AppState, item: TriageItem): ItemStatus {
  const op = pendingOpFor(state, item.record_id);
  return op ? STATUS_BY_ACTION[op.action] : item.status;
}

/** Count of raw queue entries fetched so far; the next page's offset. */
export function loadedCount(state: AppState): number {
  return state.pages.reduce((n, page) => n + page.items.length, 0);
}

function clampCursor(state: AppState): AppState {
  const count = flatItems(state).length;
  if (count === 0) return { ...state, cursor: null };
  if (state.cursor === null) return { ...state, cursor: 0 };
  return { ...state, cursor: Math.min(state.cursor, count - 1) };
}

/** First index at or after `from` whose effective status is pending. */
function nextPendingIndex(state: AppState, from: number): number | null {
  const items = flatItems(state);
  for (let i = from; i < items.length; i += 1) {
    const item = items[i];
    if (item && effectiveStatus(state, item) === "pending") return i;
  }
  return null;
}

export function reduce(state: AppState, event: UiEvent): AppState {
  switch (event.kind) {
    case "strategy_set":
      return {
        ...state,
        strategy: event.strategy,
        pages: [],
        total: null,
        cursor: null,
        pickerOpen: false,
      };
    case "status_filter_set":
      return {
        ...state,
        statusFilter: event.status,
        pages: [],
        total: null,
        cursor: null,
        pickerOpen: false,
      };
    case "queue_cleared":
      return { ...state, pages: [], total: null, cursor: null, pickerOpen: false };
    case "page_loaded": {
      const next = {
        ...state,
        pages: [...state.pages, event.response],
        total: event.response.total,
        banner: null,
      };
      return clampCursor(next);
    }
    case "cursor_moved": {
      const count = flatItems(state).length;
      if (count === 0) return state;
      const base = state.cursor ?? 0;
      const cursor = Math.max(0, Math.min(count - 1, base + event.delta));
      return { ...state, cursor, pickerOpen: false };
    }
    case "cursor_set": {
      const count = flatItems(state).length;
      if (event.index < 0 || event.index >= count) return state;
      return { ...state, cursor: event.index, pickerOpen: false };
    }
    case "picker_opened":
      return currentItem(state) ? { ...state, pickerOpen: true } : state;
    case "picker_closed":
      return { ...state, pickerOpen: false };
    case "zoom_toggled":
      return { ...state, zoomed: !state.zoomed };
    case "op_submitted":
      return {
        ...state,
        pending: [...state.pending, event.op],
        opSeq: state.opSeq + 1,
        pickerOpen: false,
        banner: null,
      };
    case "op_acked": {
      const op = state.pending.find((p) => p.key === event.key);
      const pages = state.pages.map((page) => ({
        ...page,
        items: page.items.map((item) =>
          item.record_id === event.item.record_id ? event.item : item,
        ),
      }));
      let next: AppState = {
        ...state,
        pages,
        pending: state.pending.filter((p) => p.key !== event.key),
      };
      // Advance only when the cursor still sits on the acknowledged item,
      // so manual navigation during a slow round trip is not yanked away.
      if (op) {
        const here = currentItem(next);
        if (here && here.record_id === op.recordId && state.cursor !== null) {
          const target = nextPendingIndex(next, state.cursor + 1);
          if (target !== null) next = { ...next, cursor: target };
        }
      }
      return next;
    }
    case "op_rejected":
      return {
        ...state,
        pending: state.pending.filter((p) => p.key !== event.key),
        banner: `annotation rejected (${event.code}): ${event.message}`,
      };
    case "item_dropped": {
      const pages = state.pages.map((page) => ({
        ...page,
        items: page.items.filter((item) => item.record_id !== event.recordId),
      }));
      return clampCursor({
        ...state,
        pages,
        pending: state.pending.filter((p) => p.recordId !== event.recordId),
      });
    }
    case "report_loaded":
      return { ...state, report: event.report, reportEmpty: false };
    case "report_empty":
      return { ...state, report: null, reportEmpty: true };
    case "service_unreachable":
      return { ...state, banner: `service unreachable: ${event.message}` };
    case "service_ok":
      return { ...state, banner: null };
  }
}
