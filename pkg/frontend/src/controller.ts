/** Orchestration: turns intents into service calls and dispatched events.
 *
 * Annotation submits are optimistic. Every distinct intent gets one
 * idempotency key; a repeat of the same intent while the first request is
 * still in flight resends the same key, so the service records exactly one
 * event no matter how fast the reviewer's fingers are.
 */

import { ApiError, type ServiceClient } from "./api";
import type { Intent } from "./keyboard";
import { labelById } from "./labels";
import type { AppState, PendingOp, UiEvent } from "./state";
import { currentItem, initialState, loadedCount, pendingOpFor, reduce } from "./state";
import type { Action, ItemStatus, Strategy, TriageItem } from "./types";

/** The slice of the API client the controller needs; lets tests stub it. */
export type ClientLike = Pick<ServiceClient, "queue" | "annotate" | "liveReport">;

export interface ControllerOptions {
  reviewer: string;
  sessionId?: string;
  strategy?: Strategy;
  statusFilter?: ItemStatus | null;
  pageLimit?: number;
}

function randomSessionId(): string {
  const cryptoApi = globalThis.crypto;
  if (cryptoApi && "randomUUID" in cryptoApi) return cryptoApi.randomUUID();
  return `s${Date.now().toString(36)}${Math.random().toString(36).slice(2, 10)}`;
}

export class Controller {
  private state: AppState;
  private readonly listeners = new Set<(state: AppState) => void>();

  constructor(
    private readonly client: ClientLike,
    options: ControllerOptions,
  ) {
    this.state = initialState({
      reviewer: options.reviewer,
      sessionId: options.sessionId ?? randomSessionId(),
      strategy: options.strategy,
      statusFilter: options.statusFilter,
      pageLimit: options.pageLimit,
    });
  }

  getState(): AppState {
    return this.state;
  }

  subscribe(listener: (state: AppState) => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  dispatch(event: UiEvent): void {
    this.state = reduce(this.state, event);
    for (const listener of this.listeners) listener(this.state);
  }

  /** Initial load: first queue page plus the live report. */
  async start(): Promise<void> {
    await this.loadNextPage();
    await this.refreshReport();
  }

  async loadNextPage(): Promise<boolean> {
    const offset = loadedCount(this.state);
    if (this.state.total !== null && offset >= this.state.total) return false;
    try {
      const response = await this.client.queue({
        strategy: this.state.strategy,
        status: this.state.statusFilter,
        offset,
        limit: this.state.pageLimit,
      });
      this.dispatch({ kind: "page_loaded", response });
      return response.items.length > 0;
    } catch (err) {
      this.dispatch({
        kind: "service_unreachable",
        message: err instanceof Error ? err.message : String(err),
      });
      return false;
    }
  }

  async loadAllPages(): Promise<void> {
    // First page establishes the total; keep paging until it is covered.
    if (this.state.total === null && !(await this.loadNextPage())) return;
    while (this.state.total !== null && loadedCount(this.state) < this.state.total) {
      if (!(await this.loadNextPage())) break;
    }
  }

  async refreshReport(): Promise<void> {
    try {
      const report = await this.client.liveReport();
      if (report === null) this.dispatch({ kind: "report_empty" });
      else this.dispatch({ kind: "report_loaded", report });
    } catch (err) {
      this.dispatch({
        kind: "service_unreachable",
        message: err instanceof Error ? err.message : String(err),
      });
    }
  }

  async setStrategy(strategy: Strategy): Promise<void> {
    if (strategy === this.state.strategy) return;
    this.dispatch({ kind: "strategy_set", strategy });
    await this.loadNextPage();
  }

  async handleIntent(intent: Intent): Promise<void> {
    switch (intent.kind) {
      case "confirm_crystal":
        return this.submit("confirm_crystal", null);
      case "confirm_noncrystal":
        return this.submit("confirm_noncrystal", null);
      case "pick_label":
        return this.submit("relabel", labelById(intent.labelId).name);
      case "open_picker":
        this.dispatch({ kind: "picker_opened" });
        return;
      case "close_picker":
        this.dispatch({ kind: "picker_closed" });
        return;
      case "next":
        this.dispatch({ kind: "cursor_moved", delta: 1 });
        return;
      case "prev":
        this.dispatch({ kind: "cursor_moved", delta: -1 });
        return;
      case "toggle_zoom":
        this.dispatch({ kind: "zoom_toggled" });
        return;
      case "set_strategy":
        return this.setStrategy(intent.strategy);
    }
  }

  /** Annotate the selected item. Safe under rapid repeats: an identical
   * in-flight intent is resent with its original idempotency key, and a
   * different intent on a busy item is ignored until the first settles.
   */
  async submit(action: Action, label: string | null): Promise<void> {
    const item = currentItem(this.state);
    if (!item) return;
    const existing = pendingOpFor(this.state, item.record_id);
    let op: PendingOp;
    if (existing) {
      if (existing.action !== action || existing.label !== label) return;
      op = existing;
    } else {
      op = {
        key: `${this.state.sessionId}-${this.state.opSeq}`,
        recordId: item.record_id,
        action,
        label,
      };
      this.dispatch({ kind: "op_submitted", op });
    }
    await this.send(op);
  }

  private async send(op: PendingOp): Promise<void> {
    try {
      const updated: TriageItem = await this.client.annotate({
        record_id: op.recordId,
        action: op.action,
        reviewer: this.state.reviewer,
        label: op.label,
        idempotency_key: op.key,
      });
      this.dispatch({ kind: "op_acked", key: op.key, item: updated });
      await this.refreshReport();
    } catch (err) {
      if (err instanceof ApiError) {
        if (err.status === 404) {
          // The item vanished server-side; drop the stale card.
          this.dispatch({ kind: "item_dropped", recordId: op.recordId });
          return;
        }
        this.dispatch({
          kind: "op_rejected",
          key: op.key,
          code: err.code,
          message: err.message,
        });
        return;
      }
      // Network failure: keep the pending op so nothing is silently lost;
      // the banner invites a retry, which reuses the same idempotency key.
      this.dispatch({
        kind: "service_unreachable",
        message: err instanceof Error ? err.message : String(err),
      });
    }
  }

  /** Retry every pending operation, reusing each original idempotency key. */
  async retryPending(): Promise<void> {
    for (const op of this.state.pending) {
      await this.send(op);
    }
  }
}
