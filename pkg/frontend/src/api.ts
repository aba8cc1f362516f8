/** Thin typed client for the tutor HTTP API. */

import type { Span } from "./highlights.js";

export interface Deviation {
  total_han: number;
  out_count: number;
  out_ratio: number | null;
  counting_mode: string;
  out_unique: string[];
}

export interface Turn {
  role: "system" | "user" | "assistant";
  content: string;
}

export interface Session {
  id: string;
  level: string;
  condition: string;
  model: string;
  history: Turn[];
  annotations: { turn_index: number; deviation: Deviation; spans: Span[] }[];
}

export interface MessageResult {
  reply: string;
  deviation: Deviation;
  spans: Span[];
}

export interface Task {
  code: string;
  title: string;
  descriptors: Record<string, string>;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string, public retryable = false) {
    super(message);
  }
}

export class ApiClient {
  constructor(private doFetch: FetchLike = (i, n) => fetch(i, n), private base = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.doFetch(this.base + path, init);
    const body = await resp.json().catch(() => ({}));
    if (!resp.ok) {
      throw new ApiError(resp.status, body.detail ?? body.error ?? resp.statusText,
        resp.status === 502 && body.retryable === true);
    }
    return body as T;
  }

  async createSession(level: string, condition = "with_list"): Promise<Session> {
    const body = await this.request<{ session: Session }>("/api/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ level, condition }),
    });
    return body.session;
  }

  async sendMessage(sessionId: string, text: string): Promise<MessageResult> {
    return this.request<MessageResult>(`/api/sessions/${sessionId}/messages`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text }),
    });
  }

  async getTasks(): Promise<Task[]> {
    const body = await this.request<{ tasks: Task[] }>("/api/tasks");
    return body.tasks;
  }

  async getCharset(level: string): Promise<{ characters: string[]; count: number }> {
    return this.request(`/api/charsets/${level}`);
  }
}
