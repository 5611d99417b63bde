/** Typed client for the session service HTTP API. All preference numbers
 * come from the server; the UI never computes statistics itself. */

import type {
  Annotation,
  CreateSessionResponse,
  NextRoundResponse,
  SessionViewPayload,
  Snapshot,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status: number | null,
    public readonly detail: unknown = null,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  let response: Response;
  try {
    response = await fetch(url, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
  } catch (err) {
    throw new ApiError(`API unreachable: ${String(err)}`, null);
  }
  let body: unknown = null;
  try {
    body = await response.json();
  } catch {
    // non-JSON error bodies are reported by status alone
  }
  if (!response.ok) {
    const detail =
      body && typeof body === "object" && "detail" in body
        ? (body as { detail: unknown }).detail
        : body;
    throw new ApiError(`HTTP ${response.status}: ${JSON.stringify(detail)}`, response.status, detail);
  }
  return body as T;
}

export class ApiClient {
  constructor(private readonly baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, "")}${path}`;
  }

  createSession(body: {
    initial_prompt: string;
    candidates_per_round?: number;
    seed?: number;
    max_rounds?: number;
  }): Promise<CreateSessionResponse> {
    return request(this.url("/sessions"), {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  getSession(sessionId: string): Promise<SessionViewPayload> {
    return request(this.url(`/sessions/${sessionId}`));
  }

  submitFeedback(
    sessionId: string,
    annotations: Record<string, Annotation>,
  ): Promise<{ ok: boolean }> {
    return request(this.url(`/sessions/${sessionId}/feedback`), {
      method: "POST",
      body: JSON.stringify({ annotations }),
    });
  }

  nextRound(sessionId: string): Promise<NextRoundResponse> {
    return request(this.url(`/sessions/${sessionId}/next`), { method: "POST" });
  }

  regenerate(sessionId: string): Promise<NextRoundResponse> {
    return request(this.url(`/sessions/${sessionId}/regenerate`), { method: "POST" });
  }

  getPreferences(sessionId: string): Promise<Snapshot> {
    return request(this.url(`/sessions/${sessionId}/preferences`));
  }

  closeSession(sessionId: string): Promise<{ ok: boolean }> {
    return request(this.url(`/sessions/${sessionId}`), { method: "DELETE" });
  }
}
