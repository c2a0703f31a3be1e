/** Thin typed client over the annotation service's JSON API. */
import type {
  DocumentDetail,
  DocumentSummary,
  JobState,
  MetricPoint,
  Span,
  Violation,
} from './types.js';

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

/** PUT rejected with the server's violation list; local state must survive. */
export class ValidationError extends Error {
  constructor(readonly violations: Violation[]) {
    super(violations.map((v) => v.message).join('; '));
  }
}

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = await response.json();
      detail = body.error ?? body.message ?? detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(detail, response.status);
  }
  return response.json() as Promise<T>;
}

export const listDocuments = (split?: string): Promise<DocumentSummary[]> =>
  fetch(split ? `/api/documents?split=${encodeURIComponent(split)}` : '/api/documents')
    .then((r) => asJson<DocumentSummary[]>(r));

export const getDocument = (id: string): Promise<DocumentDetail> =>
  fetch(`/api/documents/${id}`).then((r) => asJson<DocumentDetail>(r));

export async function putAnnotations(
  id: string,
  spans: Omit<Span, 'id'>[] | Span[],
): Promise<Span[]> {
  const response = await fetch(`/api/documents/${id}/annotations`, {
    method: 'PUT',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify(spans),
  });
  if (response.status === 422) {
    const body = await response.json();
    throw new ValidationError(body.violations ?? []);
  }
  const body = await asJson<{ spans: Span[] }>(response);
  return body.spans;
}

export const startJob = (
  kind: 'train' | 'predict',
  config: Record<string, unknown> = {},
): Promise<{ id: string }> =>
  fetch('/api/jobs', {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify({ kind, config }),
  }).then((r) => asJson<{ id: string }>(r));

export const getJob = (id: string): Promise<JobState> =>
  fetch(`/api/jobs/${id}`).then((r) => asJson<JobState>(r));

export interface HistoryResult {
  series: MetricPoint[];
  etag: string | null;
  notModified: boolean;
}

/** Conditional fetch of the metric history; pass the previous ETag to get
 * a cheap 304 when nothing changed. */
export async function getHistory(etag?: string | null): Promise<HistoryResult> {
  const headers: Record<string, string> = {};
  if (etag) headers['If-None-Match'] = etag;
  const response = await fetch('/api/metrics/history', { headers });
  if (response.status === 304) {
    return { series: [], etag: etag ?? null, notModified: true };
  }
  const body = await asJson<{ series: MetricPoint[] }>(response);
  return {
    series: body.series,
    etag: response.headers.get('ETag'),
    notModified: false,
  };
}
