// Thin typed client over session-api/1.  All mutation goes through
// documented POST/DELETE endpoints; everything else is read-only.

import type { Judgment, PendingView, SessionInfo, TraceRecord } from './model';

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class SessionApi {
  constructor(private base: string = '', private fetchFn: FetchLike = fetch.bind(globalThis)) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.base + path, init);
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const body = (await resp.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  listSessions(): Promise<{ sessions: SessionInfo[] }> {
    return this.request('/sessions');
  }

  createSession(body: Record<string, unknown>): Promise<{ id: string }> {
    return this.request('/sessions', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    });
  }

  session(id: string): Promise<SessionInfo> {
    return this.request(`/sessions/${id}`);
  }

  /** null when there is nothing to judge (HTTP 204). */
  async pending(id: string): Promise<PendingView | null> {
    const resp = await this.fetchFn(`${this.base}/sessions/${id}/pending`);
    if (resp.status === 204) return null;
    if (!resp.ok) throw new ApiError(resp.status, resp.statusText);
    return (await resp.json()) as PendingView;
  }

  submitJudgment(id: string, judgment: Judgment): Promise<{ accepted: boolean }> {
    return this.request(`/sessions/${id}/judgments`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(judgment),
    });
  }

  frontier(id: string): Promise<{ frontier: Array<Record<string, unknown>> }> {
    return this.request(`/sessions/${id}/frontier`);
  }

  async trace(id: string): Promise<TraceRecord[]> {
    const resp = await this.fetchFn(`${this.base}/sessions/${id}/trace`);
    if (!resp.ok) throw new ApiError(resp.status, resp.statusText);
    const text = await resp.text();
    return text
      .split('\n')
      .filter((line) => line.trim().length > 0)
      .map((line) => JSON.parse(line) as TraceRecord);
  }

  abort(id: string): Promise<{ status: string }> {
    return this.request(`/sessions/${id}`, { method: 'DELETE' });
  }
}
