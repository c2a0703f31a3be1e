/** Offset-accurate segmentation of a document for rendering.
 *
 * The text is cut at every span boundary so each segment is covered by a
 * fixed set of spans; adjacent spans therefore never merge visually, and
 * gold/edited spans can overlap predicted ones without losing either.
 */
import type { UiSpan } from './types.js';

export interface Segment {
  start: number;
  end: number;
  text: string;
  /** ids of gold/edited spans covering this segment (at most one when the
   * server has validated, but overlap-safe anyway) */
  spanIds: string[];
  /** ids of predicted spans covering this segment */
  predictedIds: string[];
  /** true when a gold/edited span starts exactly here (mark boundary) */
  opensSpan: boolean;
}

export function computeSegments(text: string, spans: UiSpan[]): Segment[] {
  const bounds = new Set<number>([0, text.length]);
  for (const span of spans) {
    bounds.add(span.start);
    bounds.add(span.end);
  }
  const cuts = [...bounds]
    .filter((b) => b >= 0 && b <= text.length)
    .sort((a, b) => a - b);

  const segments: Segment[] = [];
  for (let i = 0; i + 1 < cuts.length; i += 1) {
    const [start, end] = [cuts[i], cuts[i + 1]];
    if (start === end) continue;
    const covering = spans.filter((s) => s.start < end && s.end > start);
    segments.push({
      start,
      end,
      text: text.slice(start, end),
      spanIds: covering
        .filter((s) => s.provenance !== 'predicted')
        .map((s) => s.id),
      predictedIds: covering
        .filter((s) => s.provenance === 'predicted')
        .map((s) => s.id),
      opensSpan: covering.some(
        (s) => s.provenance !== 'predicted' && s.start === start,
      ),
    });
  }
  return segments;
}

/** Map a (segment-start, in-node offset) pair back to a document offset;
 * rendering tags each segment node with its start so selections never go
 * through a re-tokenization. */
export function selectionOffset(segmentStart: number, offsetInNode: number): number {
  return segmentStart + offsetInNode;
}
