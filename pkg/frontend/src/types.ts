/** Wire types mirroring the triage service's JSON payloads. */

export type Strategy = "top1" | "top2" | "top3";

export type Action = "confirm_crystal" | "confirm_noncrystal" | "relabel";

export type ItemStatus =
  | "pending"
  | "confirmed_crystal"
  | "confirmed_noncrystal"
  | "relabeled";

export const STATUS_BY_ACTION: Record<Action, ItemStatus> = {
  confirm_crystal: "confirmed_crystal",
  confirm_noncrystal: "confirmed_noncrystal",
  relabel: "relabeled",
};

export interface TriageItem {
  record_id: string;
  image_path: string;
  image_digest: string;
  checkpoint_digest: string;
  activations: number[];
  ranked_labels: number[];
  crystal_flag_topn: Record<string, boolean>;
  ingested_at: number;
  status: ItemStatus;
  human_label: string | null;
  reviewer: string | null;
  reviewed_at: number | null;
}

export interface QueueResponse {
  strategy: string;
  status: string | null;
  offset: number;
  limit: number;
  total: number;
  items: TriageItem[];
}

export interface AnnotationRequest {
  record_id: string;
  action: Action;
  reviewer: string;
  label?: string | null;
  idempotency_key?: string;
}

export interface AnnotationEvent {
  record_id: string;
  action: string;
  reviewer: string;
  label: string | null;
  timestamp: number;
  idempotency_key: string | null;
}

export interface LiveReport {
  top_n_accuracy: Record<string, number>;
  per_class_accuracy: Record<string, number | null>;
  class_average_accuracy: number | null;
  confusion_counts: number[][];
  confusion_column_percentages: number[][];
  confusion_empty_columns: number[];
  auc: Record<string, number | null>;
  missed_crystal_rate: Record<string, number | null>;
}

export interface HealthResponse {
  status: string;
  items: number;
  events: number;
  checkpoint: string;
}

export interface ApiErrorBody {
  code: string;
  message: string;
}
