import { ApiError, GatewayClient } from "./api.js";
import { renderSubgraph } from "./graphview.js";
import { renderProvenance } from "./provenance.js";
import { ConsoleSession, QueryQueue } from "./session.js";
import type { Mode, Subgraph } from "./types.js";

const MODES: Mode[] = ["base", "rag", "grg"];

export class ConsoleApp {
  readonly session: ConsoleSession;
  private readonly queue = new QueryQueue();
  private currentEntity: string | null = null;
  private currentDepth: 1 | 2 = 1;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: GatewayClient,
    baseUrl = "",
  ) {
    this.session = new ConsoleSession(baseUrl);
    this.render();
  }

  private $(selector: string): HTMLElement {
    const found = this.root.querySelector<HTMLElement>(selector);
    if (!found) throw new Error(`missing element ${selector}`);
    return found;
  }

  private render(): void {
    this.root.innerHTML = `
      <header class="top">
        <h1>grg console</h1>
        <div class="mode-toggle" role="radiogroup" aria-label="retrieval mode"></div>
      </header>
      <div class="banner" hidden></div>
      <form class="query-form">
        <textarea class="query-input" rows="3"
          placeholder="ask about the corpus&hellip;"></textarea>
        <input class="image-input" placeholder="fixture image id (optional)" />
        <button type="submit" class="ask">ask</button>
      </form>
      <main class="body">
        <section class="turns"></section>
        <aside class="graph-pane" hidden></aside>
      </main>`;

    const toggle = this.$(".mode-toggle");
    for (const mode of MODES) {
      const button = document.createElement("button");
      button.type = "button";
      button.dataset.mode = mode;
      button.textContent = mode;
      button.className = mode === this.session.activeMode ? "active" : "";
      button.addEventListener("click", () => this.setMode(mode));
      toggle.append(button);
    }
    this.$(".query-form").addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submit();
    });
  }

  setMode(mode: Mode): void {
    this.session.activeMode = mode;
    for (const button of this.root.querySelectorAll<HTMLButtonElement>(".mode-toggle button")) {
      button.className = button.dataset.mode === mode ? "active" : "";
    }
  }

  private banner(message: string, retry?: () => void): void {
    const box = this.$(".banner");
    box.hidden = false;
    box.innerHTML = "";
    box.append(Object.assign(document.createElement("span"), { textContent: message }));
    if (retry) {
      const button = document.createElement("button");
      button.textContent = "retry";
      button.addEventListener("click", () => {
        box.hidden = true;
        retry();
      });
      box.append(button);
    }
  }

  /** Submit the current input; queued behind any in-flight query. */
  submit(): Promise<void> {
    const input = this.$(".query-input") as HTMLTextAreaElement;
    const imageInput = this.$(".image-input") as HTMLInputElement;
    const text = input.value.trim();
    const imageIds = imageInput.value.trim() ? [imageInput.value.trim()] : [];
    if (!text && imageIds.length === 0) return Promise.resolve();
    const mode = this.session.activeMode;
    return this.queue.enqueue(async () => {
      try {
        const response = await this.client.query(text, mode, imageIds);
        this.session.append(text, mode, response.answer, response.context);
        this.appendTurnCard(text, mode, response);
        input.value = ""; // cleared only on success; failures preserve it
        this.$(".banner").hidden = true;
      } catch (error) {
        if (error instanceof ApiError && error.retryable) {
          this.banner(`service unavailable (${error.code}): ${error.message}`, () => void this.submit());
        } else {
          this.banner(error instanceof Error ? error.message : String(error));
        }
      }
    });
  }

  private appendTurnCard(query: string, mode: Mode, response: { answer: string; context: Parameters<typeof renderProvenance>[0] }): void {
    const card = document.createElement("article");
    card.className = "turn";
    const head = document.createElement("header");
    head.innerHTML = `<span class="turn-mode">${mode}</span>`;
    head.append(Object.assign(document.createElement("span"), { className: "turn-query", textContent: query }));
    const answer = document.createElement("p");
    answer.className = "turn-answer";
    answer.textContent = response.answer;
    card.append(head, answer, renderProvenance(response.context, mode, {
      onEntityClick: (entityId) => void this.openSubgraph(entityId, this.currentDepth),
    }));
    this.$(".turns").prepend(card);
  }

  async openSubgraph(entityId: string, depth: 1 | 2): Promise<void> {
    this.currentEntity = entityId;
    this.currentDepth = depth;
    const pane = this.$(".graph-pane");
    pane.hidden = false;
    let subgraph: Subgraph;
    try {
      subgraph = await this.client.entity(entityId, depth);
    } catch (error) {
      pane.innerHTML = "";
      const notice = document.createElement("p");
      notice.className = "graph-notfound";
      notice.textContent =
        error instanceof ApiError && error.status === 404
          ? `entity ${entityId} not found`
          : `subgraph unavailable: ${error instanceof Error ? error.message : error}`;
      pane.append(notice);
      return;
    }
    pane.innerHTML = "";
    pane.append(
      renderSubgraph(subgraph, {
        onRecenter: (id) => void this.openSubgraph(id, this.currentDepth),
        onDepthChange: (d) => {
          if (this.currentEntity) void this.openSubgraph(this.currentEntity, d);
        },
      }),
    );
  }
}

export function boot(root: HTMLElement, baseUrl = ""): ConsoleApp {
  return new ConsoleApp(root, new GatewayClient(baseUrl), baseUrl);
}

declare global {
  interface Window {
    grgConsole?: ConsoleApp;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  window.grgConsole = boot(document.getElementById("app")!);
}
