/** Typed fetch client for the triage service HTTP API. */

import type {
  AnnotationEvent,
  AnnotationRequest,
  ApiErrorBody,
  HealthResponse,
  LiveReport,
  QueueResponse,
  Strategy,
  TriageItem,
} from "./types";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface QueueParams {
  strategy: Strategy;
  status?: string | null;
  offset?: number;
  limit?: number;
}

export interface ClientOptions {
  baseUrl: string;
  token: string;
  fetchImpl?: typeof fetch;
}

export class ServiceClient {
  private readonly baseUrl: string;
  private readonly token: string;
  private readonly fetchImpl: typeof fetch;

  constructor(options: ClientOptions) {
    this.baseUrl = options.baseUrl.replace(/\/+$/, "");
    this.token = options.token;
    this.fetchImpl = options.fetchImpl ?? fetch;
  }

  private async request(path: string, init: RequestInit = {}): Promise<Response> {
    const headers = new Headers(init.headers);
    headers.set("Authorization", `Bearer ${this.token}`);
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      ...init,
      headers,
    });
    if (!response.ok) {
      let body: ApiErrorBody = { code: "error", message: response.statusText };
      try {
        body = (await response.json()) as ApiErrorBody;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, body.code, body.message);
    }
    return response;
  }

  async health(): Promise<HealthResponse> {
    const response = await this.fetchImpl(`${this.baseUrl}/healthz`);
    if (!response.ok) throw new ApiError(response.status, "unhealthy", "health probe failed");
    return (await response.json()) as HealthResponse;
  }

  async queue(params: QueueParams): Promise<QueueResponse> {
    const search = new URLSearchParams({ strategy: params.strategy });
    if (params.status != null) search.set("status", params.status);
    if (params.offset != null) search.set("offset", String(params.offset));
    if (params.limit != null) search.set("limit", String(params.limit));
    const response = await this.request(`/queue?${search.toString()}`);
    return (await response.json()) as QueueResponse;
  }

  async item(recordId: string): Promise<TriageItem> {
    const response = await this.request(`/items/${encodeURIComponent(recordId)}`);
    return (await response.json()) as TriageItem;
  }

  async annotate(body: AnnotationRequest): Promise<TriageItem> {
    const response = await this.request("/annotations", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return (await response.json()) as TriageItem;
  }

  /** null means the service has no annotated items yet. */
  async liveReport(): Promise<LiveReport | null> {
    try {
      const response = await this.request("/reports/live");
      return (await response.json()) as LiveReport;
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) return null;
      throw err;
    }
  }

  async ingestImages(files: { name: string; bytes: Uint8Array }[]): Promise<string[]> {
    const form = new FormData();
    for (const file of files) {
      form.append("files", new Blob([file.bytes as BlobPart], { type: "image/png" }), file.name);
    }
    const response = await this.request("/images", { method: "POST", body: form });
    const payload = (await response.json()) as { item_ids: string[] };
    return payload.item_ids;
  }

  async exportEvents(): Promise<AnnotationEvent[]> {
    const response = await this.request("/export/events");
    const text = await response.text();
    return text
      .split("\n")
      .filter((line) => line.trim().length > 0)
      .map((line) => JSON.parse(line) as AnnotationEvent);
  }

  async exportManifest(): Promise<string> {
    const response = await this.request("/export/manifest");
    return response.text();
  }

  imageUrl(recordId: string): string {
    return `${this.baseUrl}/items/${encodeURIComponent(recordId)}/image`;
  }

  /** Authenticated image fetch; plain <img src> cannot carry the bearer
   * token, so the browser app turns these blobs into object URLs.
   */
  async fetchImage(recordId: string): Promise<Blob> {
    const response = await this.request(
      `/items/${encodeURIComponent(recordId)}/image`,
    );
    return response.blob();
  }
}
