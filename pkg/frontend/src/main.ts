/** Browser bootstrap: config form, keyboard wiring, innerHTML rendering. */

import { ServiceClient } from "./api";
import { Controller } from "./controller";
import { intentFor } from "./keyboard";
import { renderApp } from "./render";

interface UiConfig {
  baseUrl: string;
  token: string;
  reviewer: string;
}

const CONFIG_KEY = "crystaltriage.ui.config";

function loadConfig(): UiConfig | null {
  try {
    const raw = localStorage.getItem(CONFIG_KEY);
    if (!raw) return null;
    const parsed = JSON.parse(raw) as Partial<UiConfig>;
    if (parsed.baseUrl && parsed.token && parsed.reviewer) {
      return parsed as UiConfig;
    }
  } catch {
    // fall through to the form
  }
  return null;
}

function renderConfigForm(root: HTMLElement, onSubmit: (config: UiConfig) => void): void {
  root.innerHTML = `
    <form class="config-form">
      <h1>crystal triage review</h1>
      <label>service url <input name="baseUrl" value="/api" required></label>
      <label>auth token <input name="token" type="password" required></label>
      <label>reviewer <input name="reviewer" required></label>
      <button type="submit">start reviewing</button>
    </form>`;
  const form = root.querySelector("form");
  form?.addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(form);
    const config: UiConfig = {
      baseUrl: String(data.get("baseUrl") ?? ""),
      token: String(data.get("token") ?? ""),
      reviewer: String(data.get("reviewer") ?? ""),
    };
    localStorage.setItem(CONFIG_KEY, JSON.stringify(config));
    onSubmit(config);
  });
}

const IMAGE_PLACEHOLDER =
  "data:image/svg+xml," +
  encodeURIComponent(
    '<svg xmlns="http://www.w3.org/2000/svg" width="240" height="240">' +
      '<rect width="100%" height="100%" fill="#22252c"/></svg>',
  );

/** Plain <img src> cannot carry the bearer token, so well images are
 * fetched with auth and swapped in as object URLs once they arrive.
 */
class ImageCache {
  private readonly urls = new Map<string, string>();
  private readonly inflight = new Set<string>();

  constructor(
    private readonly client: ServiceClient,
    private readonly onLoad: () => void,
  ) {}

  resolve(recordId: string): string {
    const cached = this.urls.get(recordId);
    if (cached) return cached;
    if (!this.inflight.has(recordId)) {
      this.inflight.add(recordId);
      void this.fetch(recordId);
    }
    return IMAGE_PLACEHOLDER;
  }

  private async fetch(recordId: string): Promise<void> {
    try {
      const blob = await this.client.fetchImage(recordId);
      this.urls.set(recordId, URL.createObjectURL(blob));
      this.onLoad();
    } catch {
      this.inflight.delete(recordId);
    }
  }
}

function startApp(root: HTMLElement, config: UiConfig): void {
  const client = new ServiceClient({ baseUrl: config.baseUrl, token: config.token });
  const controller = new Controller(client, { reviewer: config.reviewer });
  const images = new ImageCache(client, () => {
    root.innerHTML = renderApp(controller.getState(), imageUrl);
  });
  const imageUrl = (recordId: string) => images.resolve(recordId);

  controller.subscribe((state) => {
    root.innerHTML = renderApp(state, imageUrl);
  });

  document.addEventListener("keydown", (event) => {
    if (event.target instanceof HTMLInputElement) return;
    const intent = intentFor(event.key, controller.getState().pickerOpen);
    if (!intent) return;
    event.preventDefault();
    void controller.handleIntent(intent);
  });

  root.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const card = target.closest<HTMLElement>(".card[data-index]");
    if (card) {
      controller.dispatch({ kind: "cursor_set", index: Number(card.dataset.index) });
      return;
    }
    const strategyButton = target.closest<HTMLElement>("button[data-strategy]");
    if (strategyButton) {
      const strategy = strategyButton.dataset.strategy;
      if (strategy === "top1" || strategy === "top2" || strategy === "top3") {
        void controller.setStrategy(strategy);
      }
      return;
    }
    const banner = target.closest<HTMLElement>(".banner");
    if (banner) void controller.retryPending();
  });

  // Infinite scroll: pull the next page when the viewport nears the bottom.
  window.addEventListener("scroll", () => {
    const nearBottom =
      window.innerHeight + window.scrollY >= document.body.offsetHeight - 400;
    if (nearBottom) void controller.loadNextPage();
  });

  void controller.start();
}

const root = document.getElementById("app");
if (root) {
  const config = loadConfig();
  if (config) startApp(root, config);
  else renderConfigForm(root, (c) => startApp(root, c));
}
