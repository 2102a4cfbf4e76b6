// Thin HTTP client for the annotation service.  One method per
// endpoint; no caching, no client-side computation.

import {
  EventDetail,
  EventSummary,
  GapComputation,
  PointsPayload,
  PointsResponse,
} from './types.js';

export class ApiError extends Error {
  constructor(
    public status: number,
    public body: string,
    url: string,
  ) {
    super(`${status} from ${url}: ${body}`);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, init);
  const text = await resp.text();
  if (!resp.ok) {
    throw new ApiError(resp.status, text, url);
  }
  return JSON.parse(text) as T;
}

export class AnnotationApi {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, '') + path;
  }

  health(): Promise<{ status: string; events: number }> {
    return request(this.url('/health'));
  }

  listEvents(): Promise<EventSummary[]> {
    return request(this.url('/events'));
  }

  getEvent(eventId: string): Promise<EventDetail> {
    return request(this.url(`/events/${encodeURIComponent(eventId)}`));
  }

  frameImageUrl(eventId: string, t: number): string {
    return this.url(`/events/${encodeURIComponent(eventId)}/frames/${t}/image`);
  }

  submitPoints(eventId: string, t: number, payload: PointsPayload): Promise<PointsResponse> {
    return request(this.url(`/events/${encodeURIComponent(eventId)}/frames/${t}/points`), {
      method: 'PUT',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(payload),
    });
  }

  computeGap(eventId: string): Promise<GapComputation> {
    return request(this.url(`/events/${encodeURIComponent(eventId)}/compute`), {
      method: 'POST',
    });
  }
}
