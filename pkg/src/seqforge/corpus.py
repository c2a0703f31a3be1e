"""Core domain types: documents, entity spans, tokens, and the
span <-> per-token label correspondence used for training and decoding.

All types are immutable after construction and safe to share between
workers; the operations below are pure functions.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace

from .errors import OverlappingSpans, SpanCrossesToken

logger = logging.getLogger(__name__)

SPLIT_NAMES = ("train", "valid", "test", "deploy")

OUTSIDE = "O"


@dataclass(frozen=True)
class Token:
    """A tokenized slice of document text. Offsets are character-based,
    end-exclusive."""

    text: str
    start: int
    end: int


@dataclass(frozen=True)
class EntitySpan:
    """One annotated entity mention: `id` is the standoff identifier
    (e.g. "T1"), offsets are 0-based character positions, end-exclusive,
    and `surface` is the covered text."""

    id: str
    category: str
    start: int
    end: int
    surface: str


@dataclass(frozen=True)
class LabeledSentence:
    """A token sequence paired with one label per token (BIO scheme)."""

    tokens: tuple[Token, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.tokens) != len(self.labels):
            raise ValueError(
                f"{len(self.tokens)} tokens but {len(self.labels)} labels"
            )


@dataclass(frozen=True)
class Document:
    """A text with its entity annotations and, once segmented, the derived
    sentences used for training and prediction."""

    doc_id: str
    text: str
    spans: tuple[EntitySpan, ...] = ()
    sentences: tuple[LabeledSentence, ...] = ()

    def with_spans(self, spans) -> "Document":
        return replace(self, spans=tuple(spans))

    def with_sentences(self, sentences) -> "Document":
        return replace(self, sentences=tuple(sentences))


@dataclass(frozen=True)
class DatasetSplit:
    """One of the four dataset folders. Only the deploy split may lack
    gold annotations."""

    name: str
    documents: tuple[Document, ...] = ()

    def __post_init__(self):
        if self.name not in SPLIT_NAMES:
            raise ValueError(f"unknown split name {self.name!r}")


@dataclass(frozen=True)
class Violation:
    """One invariant violation found by validate_document."""

    code: str
    message: str
    span_id: str | None = None


def label_category(label: str) -> str | None:
    """Category carried by a B-/I- label, or None for 'O'."""
    if label == OUTSIDE:
        return None
    return label.split("-", 1)[1]


def spans_to_labels(
    tokens: list[Token] | tuple[Token, ...],
    spans: list[EntitySpan] | tuple[EntitySpan, ...],
    snap: bool = False,
) -> list[str]:
    """Convert entity spans over a token sequence into BIO labels.

    Span boundaries must coincide with token boundaries; when `snap` is
    true a misaligned span is widened to the smallest covering token range
    (with a warning) instead of raising SpanCrossesToken.
    """
    ordered = sorted(spans, key=lambda s: (s.start, s.end))
    for prev, cur in zip(ordered, ordered[1:]):
        if cur.start < prev.end:
            raise OverlappingSpans(
                f"{prev.id} [{prev.start},{prev.end}) overlaps "
                f"{cur.id} [{cur.start},{cur.end})"
            )

    labels = [OUTSIDE] * len(tokens)
    for span in ordered:
        covered = [
            i for i, t in enumerate(tokens)
            if t.start < span.end and t.end > span.start
        ]
        if not covered:
            raise SpanCrossesToken(
                f"{span.id} [{span.start},{span.end}) covers no token"
            )
        first, last = covered[0], covered[-1]
        aligned = (
            tokens[first].start == span.start and tokens[last].end == span.end
        )
        if not aligned:
            if not snap:
                raise SpanCrossesToken(
                    f"{span.id} [{span.start},{span.end}) does not align with "
                    f"token boundaries [{tokens[first].start},{tokens[last].end})"
                )
            logger.warning(
                "span %s [%d,%d) snapped outward to token range [%d,%d)",
                span.id, span.start, span.end,
                tokens[first].start, tokens[last].end,
            )
        labels[first] = f"B-{span.category}"
        for i in covered[1:]:
            labels[i] = f"I-{span.category}"
    return labels


def labels_to_spans(
    tokens: list[Token] | tuple[Token, ...],
    labels: list[str] | tuple[str, ...],
    text: str | None = None,
    first_id: int = 1,
) -> list[EntitySpan]:
    """Decode BIO labels over a token sequence into entity spans.

    Total on any label sequence: an I-<cat> following 'O' or a different
    category is repaired to B-<cat>. Ids are assigned "T<first_id>",
    "T<first_id+1>", ... in document order. When `text` is given, surfaces
    are sliced from it; otherwise they are reconstructed from token texts
    with single-space gap filling.
    """
    if len(tokens) != len(labels):
        raise ValueError(f"{len(tokens)} tokens but {len(labels)} labels")

    spans: list[EntitySpan] = []
    run_start: int | None = None  # first token index of the open run
    run_cat: str | None = None

    def close(last_index: int):
        nonlocal run_start, run_cat
        if run_start is None:
            return
        start = tokens[run_start].start
        end = tokens[last_index].end
        if text is not None:
            surface = text[start:end]
        else:
            parts = []
            pos = start
            for t in tokens[run_start:last_index + 1]:
                parts.append(" " * (t.start - pos))
                parts.append(t.text)
                pos = t.end
            surface = "".join(parts)
        spans.append(EntitySpan(
            id=f"T{first_id + len(spans)}",
            category=run_cat, start=start, end=end, surface=surface,
        ))
        run_start = run_cat = None

    for i, label in enumerate(labels):
        if label == OUTSIDE:
            close(i - 1)
            continue
        prefix, cat = label.split("-", 1)
        if prefix == "I" and run_cat == cat:
            continue  # run keeps growing
        # B-, or a repaired I- (after O or a different category)
        close(i - 1)
        run_start, run_cat = i, cat
    close(len(labels) - 1)
    return spans


def validate_document(doc: Document) -> list[Violation]:
    """Check every span invariant; returns violations (empty means valid)."""
    violations: list[Violation] = []
    n = len(doc.text)
    seen_ids: set[str] = set()
    for span in doc.spans:
        if span.id in seen_ids:
            violations.append(Violation(
                "DuplicateId", f"duplicate id {span.id}", span.id))
        seen_ids.add(span.id)
        if not (0 <= span.start < span.end <= n):
            violations.append(Violation(
                "OffsetOutOfRange",
                f"{span.id} offsets [{span.start},{span.end}) outside text "
                f"of length {n}", span.id))
            continue
        if doc.text[span.start:span.end] != span.surface:
            violations.append(Violation(
                "SurfaceMismatch",
                f"{span.id} surface {span.surface!r} != text slice "
                f"{doc.text[span.start:span.end]!r}", span.id))
    ordered = sorted(
        (s for s in doc.spans if 0 <= s.start < s.end <= n),
        key=lambda s: (s.start, s.end))
    for prev, cur in zip(ordered, ordered[1:]):
        if cur.start < prev.end:
            violations.append(Violation(
                "OverlappingSpans",
                f"{prev.id} overlaps {cur.id}", cur.id))
    return violations


# --- tagging scheme conversion ------------------------------------------------

def bio_to_bioes(labels: list[str] | tuple[str, ...]) -> list[str]:
    """Relabel B-I runs with explicit End/Single marks."""
    out = list(labels)
    n = len(out)
    for i, label in enumerate(out):
        if label == OUTSIDE:
            continue
        prefix, cat = label.split("-", 1)
        nxt = out[i + 1] if i + 1 < n else OUTSIDE
        continues = nxt == f"I-{cat}"
        if prefix == "B":
            out[i] = f"B-{cat}" if continues else f"S-{cat}"
        else:  # I
            out[i] = f"I-{cat}" if continues else f"E-{cat}"
    return out


def bioes_to_bio(labels: list[str] | tuple[str, ...]) -> list[str]:
    """Collapse End/Single marks back to the two-prefix scheme."""
    out = []
    for label in labels:
        if label == OUTSIDE:
            out.append(OUTSIDE)
            continue
        prefix, cat = label.split("-", 1)
        out.append(f"B-{cat}" if prefix in ("B", "S") else f"I-{cat}")
    return out


def expand_labels(categories, tagging_format: str = "bio") -> list[str]:
    """The closed label set for a category list, 'O' first, categories in
    lexicographic order."""
    labels = [OUTSIDE]
    prefixes = ("B", "I") if tagging_format == "bio" else ("B", "I", "E", "S")
    for cat in sorted(set(categories)):
        labels.extend(f"{p}-{cat}" for p in prefixes)
    return labels
