import { afterEach, describe, expect, it, vi } from 'vitest';

import {
  ApiError,
  ValidationError,
  getHistory,
  listDocuments,
  putAnnotations,
  startJob,
} from '../src/api.js';

function jsonResponse(body: unknown, status = 200, headers: Record<string, string> = {}) {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json', ...headers },
  });
}

afterEach(() => {
  vi.restoreAllMocks();
});

describe('listDocuments', () => {
  it('hits the documents endpoint', async () => {
    const mock = vi.spyOn(globalThis, 'fetch').mockResolvedValue(
      jsonResponse([{ id: 'train/a', split: 'train', span_count: 1 }]));
    const docs = await listDocuments();
    expect(mock).toHaveBeenCalledWith('/api/documents');
    expect(docs[0].id).toBe('train/a');
  });

  it('encodes the split filter', async () => {
    const mock = vi.spyOn(globalThis, 'fetch').mockResolvedValue(jsonResponse([]));
    await listDocuments('valid');
    expect(mock).toHaveBeenCalledWith('/api/documents?split=valid');
  });
});

describe('putAnnotations', () => {
  it('returns the stored spans on success', async () => {
    const stored = [{ id: 'T1', category: 'PER', start: 0, end: 4, surface: 'John' }];
    vi.spyOn(globalThis, 'fetch').mockResolvedValue(jsonResponse({ spans: stored }));
    await expect(putAnnotations('train/a', stored)).resolves.toEqual(stored);
  });

  it('surfaces 422 violations as ValidationError', async () => {
    vi.spyOn(globalThis, 'fetch').mockImplementation(async () => jsonResponse({
      violations: [{ code: 'OverlappingSpans', message: 'T1 overlaps T2', span_id: 'T2' }],
    }, 422));
    try {
      await putAnnotations('train/a', []);
      expect.unreachable();
    } catch (err) {
      expect(err).toBeInstanceOf(ValidationError);
      expect((err as ValidationError).violations[0].code).toBe('OverlappingSpans');
    }
  });

  it('sends the spans as the PUT body', async () => {
    const mock = vi.spyOn(globalThis, 'fetch').mockResolvedValue(
      jsonResponse({ spans: [] }));
    const spans = [{ category: 'PER', start: 0, end: 4, surface: 'John' }];
    await putAnnotations('train/a', spans);
    const [url, init] = mock.mock.calls[0];
    expect(url).toBe('/api/documents/train/a/annotations');
    expect(init?.method).toBe('PUT');
    expect(JSON.parse(init?.body as string)).toEqual(spans);
  });
});

describe('startJob', () => {
  it('posts the kind and config', async () => {
    const mock = vi.spyOn(globalThis, 'fetch').mockResolvedValue(
      jsonResponse({ id: 'job-1' }, 202));
    const result = await startJob('train', { patience: 1 });
    expect(result.id).toBe('job-1');
    const [, init] = mock.mock.calls[0];
    expect(JSON.parse(init?.body as string)).toEqual(
      { kind: 'train', config: { patience: 1 } });
  });

  it('maps a 409 conflict to ApiError with the status', async () => {
    vi.spyOn(globalThis, 'fetch').mockResolvedValue(
      jsonResponse({ error: 'a training job is already running' }, 409));
    try {
      await startJob('train');
      expect.unreachable();
    } catch (err) {
      expect(err).toBeInstanceOf(ApiError);
      expect((err as ApiError).status).toBe(409);
      expect((err as ApiError).message).toContain('already running');
    }
  });
});

describe('getHistory', () => {
  it('returns the series and the ETag', async () => {
    vi.spyOn(globalThis, 'fetch').mockResolvedValue(jsonResponse(
      { series: [{ epoch: 1, split: 'valid', precision: 1, recall: 1, f1: 1, loss: null, seconds: 0 }] },
      200, { ETag: '"h1-1"' }));
    const result = await getHistory();
    expect(result.series).toHaveLength(1);
    expect(result.etag).toBe('"h1-1"');
    expect(result.notModified).toBe(false);
  });

  it('passes the previous ETag and honors 304', async () => {
    const mock = vi.spyOn(globalThis, 'fetch').mockResolvedValue(
      new Response(null, { status: 304 }));
    const result = await getHistory('"h1-1"');
    const [, init] = mock.mock.calls[0];
    expect((init?.headers as Record<string, string>)['If-None-Match']).toBe('"h1-1"');
    expect(result.notModified).toBe(true);
    expect(result.etag).toBe('"h1-1"');
  });
});
