// Typed client for the review API. The fetch implementation is injectable
// so unit tests can run without a server.

import type {
  OverridePayload,
  Progress,
  QueueItem,
  QueueResponse,
  StatusFilter,
  VerdictResponse,
} from './types.js';

export class ApiError extends Error {
  readonly status: number;
  readonly detail: string;

  constructor(status: number, detail: string) {
    super(`API error ${status}: ${detail}`);
    this.status = status;
    this.detail = detail;
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ReviewApi {
  private readonly baseUrl: string;
  private readonly token: string | null;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, token: string | null = null, fetchImpl?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/$/, '');
    this.token = token;
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private headers(): Record<string, string> {
    const headers: Record<string, string> = { 'Content-Type': 'application/json' };
    if (this.token) {
      headers['Authorization'] = `Bearer ${this.token}`;
    }
    return headers;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      ...init,
      headers: { ...this.headers(), ...(init?.headers as Record<string, string> | undefined) },
    });
    const text = await response.text();
    if (!response.ok) {
      let detail = text;
      try {
        detail = JSON.stringify(JSON.parse(text).detail ?? text);
      } catch {
        // non-JSON error body: show it verbatim
      }
      throw new ApiError(response.status, detail);
    }
    return JSON.parse(text) as T;
  }

  fetchQueue(status: StatusFilter = 'pending'): Promise<QueueResponse> {
    return this.request<QueueResponse>(`/api/queue?status=${status}`);
  }

  fetchItem(ref: string): Promise<QueueItem> {
    return this.request<QueueItem>(`/api/item/${encodeURIComponent(ref)}`);
  }

  fetchProgress(): Promise<Progress> {
    return this.request<Progress>('/api/progress');
  }

  submitOverride(payload: OverridePayload): Promise<VerdictResponse> {
    return this.request<VerdictResponse>('/api/verdict', {
      method: 'POST',
      body: JSON.stringify(payload),
    });
  }
}
