/** Shared shapes mirrored from the JSON API. */

export interface Span {
  id: string;
  category: string;
  start: number;
  end: number;
  surface: string;
}

export type Provenance = 'gold' | 'predicted' | 'edited';

/** A span as the editor tracks it: the API span plus where it came from. */
export interface UiSpan extends Span {
  provenance: Provenance;
}

export interface DocumentSummary {
  id: string;
  split: string;
  span_count: number;
}

export interface DocumentDetail {
  id: string;
  split: string;
  text: string;
  spans: Span[];
  predicted?: Span[];
}

export interface JobProgress {
  completed: number;
  total: number;
}

export interface JobState {
  id: string;
  kind: 'train' | 'predict';
  status: 'queued' | 'running' | 'done' | 'failed';
  progress: JobProgress;
  message: string;
}

export interface MetricPoint {
  epoch: number;
  split: string;
  precision: number;
  recall: number;
  f1: number;
  loss: number | null;
  seconds: number;
}

export interface Violation {
  code: string;
  message: string;
  span_id: string | null;
}
