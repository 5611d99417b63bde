/** App controller: candidate grid, feedback flow, dashboard refresh.
 *
 * All state transitions go through the HTTP API; one mutation may be in
 * flight per session (double submits are ignored while a request runs).
 */

import { ApiClient, ApiError } from "./api.js";
import { renderDashboard } from "./dashboard.js";
import {
  annotate,
  annotationsPayload,
  isStatisticsNeutral,
  newRoundView,
} from "./state.js";
import type { SessionView } from "./types.js";

export interface AppOptions {
  /** Confirmation hook for statistics-neutral rounds (defaults to window.confirm). */
  confirm?: (message: string) => boolean;
  candidatesPerRound?: number;
  seed?: number;
}

export class App {
  view: SessionView | null = null;
  inFlight = false;
  private readonly confirmFn: (message: string) => boolean;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly options: AppOptions = {},
  ) {
    this.confirmFn = options.confirm ?? ((message) => window.confirm(message));
    this.root.innerHTML = `
      <form class="start-form">
        <input class="prompt-input" type="text" placeholder="describe the image you want" />
        <button class="start-button" type="submit">Start</button>
      </form>
      <div class="error-bar" hidden></div>
      <div class="session-bar" hidden>
        <span class="round-label"></span>
        <button class="submit-button" type="button">Submit &amp; next</button>
        <button class="regenerate-button" type="button">Regenerate</button>
        <button class="refresh-button" type="button">Refresh dashboard</button>
      </div>
      <div class="candidate-grid"></div>
      <div class="dashboard"></div>
    `;
    this.bind();
  }

  private q<T extends HTMLElement>(selector: string): T {
    const node = this.root.querySelector(selector);
    if (!node) throw new Error(`missing UI node ${selector}`);
    return node as T;
  }

  private bind(): void {
    this.q<HTMLFormElement>(".start-form").addEventListener("submit", (event) => {
      event.preventDefault();
      void this.start(this.q<HTMLInputElement>(".prompt-input").value);
    });
    this.q<HTMLButtonElement>(".submit-button").addEventListener("click", () => {
      void this.submitAndNext();
    });
    this.q<HTMLButtonElement>(".regenerate-button").addEventListener("click", () => {
      void this.regenerate();
    });
    this.q<HTMLButtonElement>(".refresh-button").addEventListener("click", () => {
      void this.refreshDashboard();
    });
  }

  private showError(message: string, retry: () => Promise<void>): void {
    const bar = this.q<HTMLDivElement>(".error-bar");
    bar.hidden = false;
    bar.textContent = message + " ";
    const button = document.createElement("button");
    button.className = "retry-button";
    button.textContent = "Retry";
    button.addEventListener("click", () => {
      bar.hidden = true;
      void retry();
    });
    bar.appendChild(button);
  }

  private clearError(): void {
    const bar = this.q<HTMLDivElement>(".error-bar");
    bar.hidden = true;
    bar.textContent = "";
  }

  async start(initialPrompt: string): Promise<void> {
    if (this.inFlight) return;
    if (!initialPrompt.trim()) {
      // client-side validation: no request leaves the browser
      this.showError("Enter a prompt first.", async () => {});
      return;
    }
    this.clearError();
    this.inFlight = true;
    try {
      const created = await this.api.createSession({
        initial_prompt: initialPrompt,
        candidates_per_round: this.options.candidatesPerRound,
        seed: this.options.seed,
      });
      this.view = newRoundView(created.session_id, 0, created.candidates);
      this.renderGrid();
      await this.refreshDashboardUnguarded();
    } catch (err) {
      this.showError(describe(err), () => this.start(initialPrompt));
    } finally {
      this.inFlight = false;
    }
  }

  mark(imageId: string, clicked: "liked" | "disliked"): void {
    if (!this.view || this.inFlight) return;
    this.view = annotate(this.view, imageId, clicked);
    this.renderGrid();
  }

  async submitAndNext(): Promise<void> {
    if (!this.view || this.inFlight) return;
    if (isStatisticsNeutral(this.view)) {
      const ok = this.confirmFn(
        "This round has no liked/disliked contrast, so it will not update " +
          "the preference statistics. Submit anyway?",
      );
      if (!ok) return;
    }
    this.clearError();
    this.inFlight = true;
    this.q<HTMLButtonElement>(".submit-button").disabled = true;
    try {
      await this.api.submitFeedback(this.view.sessionId, annotationsPayload(this.view));
      const next = await this.api.nextRound(this.view.sessionId);
      this.view = newRoundView(next.session_id, next.round_index, next.candidates);
      this.renderGrid();
      await this.refreshDashboardUnguarded();
    } catch (err) {
      this.showError(describe(err), () => this.submitAndNext());
    } finally {
      this.inFlight = false;
      this.q<HTMLButtonElement>(".submit-button").disabled = false;
    }
  }

  async regenerate(): Promise<void> {
    if (!this.view || this.inFlight) return;
    this.clearError();
    this.inFlight = true;
    try {
      const next = await this.api.regenerate(this.view.sessionId);
      this.view = newRoundView(next.session_id, this.view.roundIndex, next.candidates);
      this.renderGrid();
    } catch (err) {
      this.showError(describe(err), () => this.regenerate());
    } finally {
      this.inFlight = false;
    }
  }

  async refreshDashboard(): Promise<void> {
    if (!this.view || this.inFlight) return;
    await this.refreshDashboardUnguarded();
  }

  private async refreshDashboardUnguarded(): Promise<void> {
    if (!this.view) return;
    try {
      const snapshot = await this.api.getPreferences(this.view.sessionId);
      renderDashboard(this.q(".dashboard"), snapshot);
    } catch (err) {
      this.showError(describe(err), () => this.refreshDashboard());
    }
  }

  private renderGrid(): void {
    const grid = this.q<HTMLDivElement>(".candidate-grid");
    grid.textContent = "";
    if (!this.view) return;
    this.q<HTMLDivElement>(".session-bar").hidden = false;
    this.q<HTMLSpanElement>(".round-label").textContent =
      `session ${this.view.sessionId} — round ${this.view.roundIndex}`;
    for (const card of this.view.cards) {
      const node = document.createElement("div");
      node.className = `candidate-card ${card.annotation}`;
      node.dataset.imageId = card.payload.image_id;
      node.dataset.annotation = card.annotation;

      const img = document.createElement("img");
      img.className = "candidate-image";
      img.src = card.payload.uri;
      img.alt = card.payload.prompt;
      node.appendChild(img);

      const caption = document.createElement("div");
      caption.className = "candidate-caption";
      caption.textContent = card.payload.prompt;
      node.appendChild(caption);

      for (const mark of ["liked", "disliked"] as const) {
        const button = document.createElement("button");
        button.type = "button";
        button.className = `mark-${mark}${card.annotation === mark ? " active" : ""}`;
        button.textContent = mark === "liked" ? "Like" : "Dislike";
        button.addEventListener("click", () => this.mark(card.payload.image_id, mark));
        node.appendChild(button);
      }
      grid.appendChild(node);
    }
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) {
    return err.status === null ? "API unreachable." : `Request failed (${err.message}).`;
  }
  return String(err);
}
