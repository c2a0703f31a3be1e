/** The editor's local span model: stage edits against the server copy,
 * track dirtiness, and serialize a canonical payload for PUT.
 *
 * Spans are edited as character offsets only; ids are reassigned
 * T1..Tn in document order at save time, which is safe because PUT
 * replaces the whole annotation set atomically.
 */
import type { Provenance, Span, UiSpan } from './types.js';

let counter = 0;
const freshId = () => {
  counter += 1;
  return `staged-${counter}`;
};

export class EditorState {
  text = '';
  private spans = new Map<string, UiSpan>();
  private predicted: UiSpan[] = [];
  private baseline = '';

  load(text: string, gold: Span[], predicted: Span[] = []): void {
    this.text = text;
    this.spans = new Map(
      gold.map((s) => [s.id, { ...s, provenance: 'gold' as Provenance }]),
    );
    this.predicted = predicted.map((s) => ({
      ...s,
      provenance: 'predicted' as Provenance,
    }));
    this.baseline = JSON.stringify(this.toPayload());
  }

  /** Everything the renderer needs, editable spans before predictions. */
  all(): UiSpan[] {
    return [...this.spans.values(), ...this.predicted];
  }

  editable(): UiSpan[] {
    return [...this.spans.values()].sort((a, b) => a.start - b.start);
  }

  get(id: string): UiSpan | undefined {
    return this.spans.get(id);
  }

  get dirty(): boolean {
    return JSON.stringify(this.toPayload()) !== this.baseline;
  }

  /** Stage a new span over a selection; returns null for empty or
   * out-of-range selections. */
  addSpan(start: number, end: number, category: string): UiSpan | null {
    if (!(start >= 0 && start < end && end <= this.text.length)) return null;
    const span: UiSpan = {
      id: freshId(),
      category,
      start,
      end,
      surface: this.text.slice(start, end),
      provenance: 'edited',
    };
    this.spans.set(span.id, span);
    return span;
  }

  changeCategory(id: string, category: string): boolean {
    const span = this.spans.get(id);
    if (!span) return false;
    this.spans.set(id, { ...span, category, provenance: 'edited' });
    return true;
  }

  deleteSpan(id: string): boolean {
    return this.spans.delete(id);
  }

  /** Canonical PUT body: document order, ids renumbered T1..Tn. */
  toPayload(): Span[] {
    return this.editable().map((span, i) => ({
      id: `T${i + 1}`,
      category: span.category,
      start: span.start,
      end: span.end,
      surface: span.surface,
    }));
  }

  /** Adopt the server's response as the new clean state. */
  committed(stored: Span[]): void {
    this.load(this.text, stored, this.predicted);
  }

  categories(): string[] {
    const seen = new Set<string>();
    for (const span of this.all()) seen.add(span.category);
    return [...seen].sort();
  }
}
