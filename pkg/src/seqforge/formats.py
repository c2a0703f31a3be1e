"""Standoff (.txt/.ann) and CoNLL file parsing and emission, plus the rule
tokenizer and sentence splitter that bridge raw text and token sequences.

All functions are pure; documents can be parsed concurrently one file per
worker.
"""
from __future__ import annotations

import logging
import os
import re
from pathlib import Path

from .corpus import (
    DatasetSplit,
    Document,
    EntitySpan,
    LabeledSentence,
    OUTSIDE,
    SPLIT_NAMES,
    Token,
    labels_to_spans,
    spans_to_labels,
)
from .errors import (
    MalformedAnnLine,
    MalformedLine,
    OffsetOutOfRange,
    SurfaceMismatch,
    UnknownLabelForm,
)

logger = logging.getLogger(__name__)

_BOM = "﻿"

_TERMINATORS = ".!?"

_LABEL_RE = re.compile(r"^[BIES]-\S+$")


def tokenize(text: str) -> list[Token]:
    """Deterministic rule tokenizer: maximal runs of letters/digits are
    tokens, every other non-whitespace character is its own token."""
    tokens: list[Token] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isalnum():
            j = i + 1
            while j < n and text[j].isalnum():
                j += 1
            tokens.append(Token(text[i:j], i, j))
            i = j
        else:
            tokens.append(Token(ch, i, i + 1))
            i += 1
    return tokens


def split_sentences(text: str) -> list[tuple[int, int]]:
    """Sentence offset ranges. Splits after '.', '!' or '?' followed by
    whitespace and an uppercase letter (or end of text); a blank line always
    splits. Ranges are trimmed of surrounding whitespace and together cover
    every non-whitespace character."""
    n = len(text)
    breaks: list[int] = []  # split positions: sentence ends at position p
    i = 0
    while i < n:
        ch = text[i]
        if ch in _TERMINATORS:
            j = i + 1
            while j < n and text[j].isspace():
                j += 1
            # at least one whitespace after the terminator, then uppercase
            if j == n or (j > i + 1 and text[j].isupper()):
                breaks.append(i + 1)
                i = j
                continue
        elif ch == "\n":
            j = i + 1
            newlines = 1
            while j < n and text[j].isspace():
                newlines += text[j] == "\n"
                j += 1
            if newlines >= 2:
                breaks.append(i)
                i = j
                continue
        i += 1

    ranges: list[tuple[int, int]] = []
    prev = 0
    for b in breaks + [n]:
        start, end = prev, b
        while start < end and text[start].isspace():
            start += 1
        while end > start and text[end - 1].isspace():
            end -= 1
        if start < end:
            ranges.append((start, end))
        prev = b
    return ranges


def segment_document(doc: Document, snap: bool = False) -> Document:
    """Populate a document's sentences by splitting and tokenizing its text
    and aligning gold spans to per-token labels."""
    sentences = []
    for start, end in split_sentences(doc.text):
        tokens = tokenize(doc.text[start:end])
        tokens = [Token(t.text, t.start + start, t.end + start) for t in tokens]
        if not tokens:
            continue
        in_range = [s for s in doc.spans if s.start < end and s.end > start]
        labels = spans_to_labels(tokens, in_range, snap=snap)
        sentences.append(LabeledSentence(tuple(tokens), tuple(labels)))
    return doc.with_sentences(sentences)


# --- BRAT standoff -----------------------------------------------------------

def _clean_surface(s: str) -> str:
    # standoff lines are tab/newline delimited, so these cannot appear raw
    return s.replace("\n", " ").replace("\r", " ").replace("\t", " ")


def parse_brat(text: str, ann: str, doc_id: str = "doc") -> Document:
    """Build a Document from a .txt/.ann standoff pair.

    Only T-lines are consumed; other annotation types (A/R/#/E/...) are
    skipped with a warning. The T-line grammar is
    `Tn<TAB>Category start end<TAB>surface`.
    """
    text = text.removeprefix(_BOM)
    ann = ann.removeprefix(_BOM)
    spans: list[EntitySpan] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(ann.splitlines(), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            continue
        first = line.split("\t", 1)[0]
        if not first or not first.startswith("T"):
            logger.warning("%s: skipping non-entity ann line %d: %r",
                           doc_id, lineno, line[:50])
            continue
        fields = line.split("\t", 2)
        if len(fields) != 3:
            raise MalformedAnnLine(
                f"expected 3 tab-separated fields, got {len(fields)}", lineno)
        span_id, middle, surface = fields
        parts = middle.split(" ")
        if len(parts) != 3:
            raise MalformedAnnLine(
                f"expected 'Category start end', got {middle!r} "
                "(discontinuous spans are unsupported)", lineno)
        category, start_s, end_s = parts
        try:
            start, end = int(start_s), int(end_s)
        except ValueError:
            raise MalformedAnnLine(f"non-integer offsets in {middle!r}", lineno)
        if span_id in seen:
            raise MalformedAnnLine(f"duplicate annotation id {span_id}", lineno)
        seen.add(span_id)
        if not (0 <= start < end <= len(text)):
            raise OffsetOutOfRange(
                f"{doc_id} line {lineno}: [{start},{end}) outside text of "
                f"length {len(text)}")
        slice_ = _clean_surface(text[start:end])
        if surface != slice_:
            raise SurfaceMismatch(
                f"{doc_id} line {lineno}: surface {surface!r} != text slice "
                f"{slice_!r}")
        spans.append(EntitySpan(span_id, category, start, end, text[start:end]))
    return Document(doc_id=doc_id, text=text, spans=tuple(spans))


def _id_sort_key(span_id: str):
    m = re.fullmatch(r"([A-Za-z]*)(\d+)", span_id)
    if m:
        return (m.group(1), int(m.group(2)))
    return (span_id, 0)


def write_brat(doc: Document) -> tuple[str, str]:
    """Serialize a Document to its (text, ann) standoff pair. The text half
    is the document text unchanged; T-lines are emitted in id order."""
    lines = []
    for span in sorted(doc.spans, key=lambda s: _id_sort_key(s.id)):
        surface = _clean_surface(span.surface)
        lines.append(f"{span.id}\t{span.category} {span.start} {span.end}\t{surface}\n")
    return doc.text, "".join(lines)


# --- CoNLL --------------------------------------------------------------------

def _normalize_bio(labels: list[str]) -> list[str]:
    """IOB1 -> BIO: an I-<cat> at sentence start or after 'O'/another
    category begins a new entity. Well-formed BIO passes through unchanged."""
    out = []
    prev_cat = None
    for label in labels:
        if label == OUTSIDE:
            out.append(label)
            prev_cat = None
            continue
        prefix, cat = label.split("-", 1)
        if prefix == "I" and prev_cat != cat:
            out.append(f"B-{cat}")
        else:
            out.append(label)
        prev_cat = cat
    return out


def parse_conll(content: str, label_column: int = -1,
                doc_prefix: str = "doc") -> list[Document]:
    """Parse CoNLL content into one Document per -DOCSTART- block (or a
    single Document when no marker is present).

    Text is reconstructed by joining tokens with single spaces and
    sentences with newlines; entity spans are derived from the labels.
    """
    content = content.removeprefix(_BOM)
    raw_docs: list[list[list[tuple[str, str]]]] = []  # docs -> sentences -> rows
    sentence: list[tuple[str, str]] = []
    current: list[list[tuple[str, str]]] | None = None

    def flush_sentence():
        nonlocal sentence, current
        if sentence:
            if current is None:
                current = []
                raw_docs.append(current)
            current.append(sentence)
            sentence = []

    def start_document():
        nonlocal current
        flush_sentence()
        current = []
        raw_docs.append(current)

    for lineno, raw in enumerate(content.splitlines(), start=1):
        line = raw.strip()
        if not line:
            flush_sentence()
            continue
        cols = line.split()
        if cols[0] == "-DOCSTART-":
            start_document()
            continue
        if len(cols) < 2:
            raise MalformedLine(f"expected >= 2 columns, got {line!r}", lineno)
        label = cols[label_column]
        if label != OUTSIDE and not _LABEL_RE.match(label):
            raise UnknownLabelForm(f"line {lineno}: unrecognized label {label!r}")
        if label != OUTSIDE and label[0] not in "BI":
            raise UnknownLabelForm(
                f"line {lineno}: label {label!r} is not BIO/IOB1")
        sentence.append((cols[0], label))
    flush_sentence()

    documents = []
    populated = [r for r in raw_docs if r]
    for d, doc_rows in enumerate(populated):
        text_parts: list[str] = []
        sentences: list[LabeledSentence] = []
        spans: list[EntitySpan] = []
        offset = 0
        for rows in doc_rows:
            tokens = []
            labels = _normalize_bio([label for _, label in rows])
            for word, _ in rows:
                if text_parts and not text_parts[-1].endswith("\n"):
                    text_parts.append(" ")
                    offset += 1
                tokens.append(Token(word, offset, offset + len(word)))
                text_parts.append(word)
                offset += len(word)
            text_parts.append("\n")
            offset += 1
            sentences.append(LabeledSentence(tuple(tokens), tuple(labels)))
            spans.extend(labels_to_spans(
                tokens, labels, first_id=len(spans) + 1))
        text = "".join(text_parts)[:-1]  # no newline after the last sentence
        # surfaces sliced from the reconstructed text
        spans = [EntitySpan(s.id, s.category, s.start, s.end,
                            text[s.start:s.end]) for s in spans]
        documents.append(Document(
            doc_id=f"{doc_prefix}{d:03d}" if len(populated) > 1 else doc_prefix,
            text=text, spans=tuple(spans), sentences=tuple(sentences)))
    return documents


def write_conll(docs: list[Document] | tuple[Document, ...],
                snap: bool = False) -> str:
    """Serialize documents as two-column `token label` CoNLL with blank
    lines between sentences and a '-DOCSTART- O' line between documents."""
    out: list[str] = []
    for d, doc in enumerate(docs):
        if d > 0:
            out.append("-DOCSTART- O\n\n")
        segmented = doc if doc.sentences else segment_document(doc, snap=snap)
        for sent in segmented.sentences:
            for token, label in zip(sent.tokens, sent.labels):
                out.append(f"{token.text} {label}\n")
            out.append("\n")
    return "".join(out)


# --- dataset folders ------------------------------------------------------------

def _read_text(path: Path) -> str:
    return path.read_text(encoding="utf-8").removeprefix(_BOM)


def load_brat_directory(directory: Path) -> list[Document]:
    """Load every .txt (with optional sibling .ann) pair in a directory."""
    docs = []
    for txt_path in sorted(directory.glob("*.txt")):
        ann_path = txt_path.with_suffix(".ann")
        ann = _read_text(ann_path) if ann_path.exists() else ""
        docs.append(parse_brat(_read_text(txt_path), ann, doc_id=txt_path.stem))
    return docs


def load_split(directory: Path | str, name: str) -> DatasetSplit:
    """Load one split directory, auto-detecting BRAT (.txt/.ann pairs) or
    CoNLL (.conll) content by extension."""
    directory = Path(directory)
    if not directory.is_dir():
        return DatasetSplit(name=name)
    docs: list[Document] = []
    txts = sorted(directory.glob("*.txt"))
    conlls = sorted(directory.glob("*.conll"))
    if txts:
        docs = load_brat_directory(directory)
    elif conlls:
        for path in conlls:
            docs.extend(parse_conll(_read_text(path), doc_prefix=path.stem))
    return DatasetSplit(name=name, documents=tuple(docs))


def load_dataset(folder: Path | str) -> dict[str, DatasetSplit]:
    """Load the `{train,valid,test,deploy}` split directories that exist
    under a dataset folder."""
    folder = Path(folder)
    splits = {}
    for name in SPLIT_NAMES:
        split = load_split(folder / name, name)
        if split.documents:
            splits[name] = split
    return splits


def write_brat_directory(docs, directory: Path | str, force: bool = False):
    """Write each document as a .txt/.ann pair under `directory`."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for doc in docs:
        text, ann = write_brat(doc)
        txt_path = directory / f"{doc.doc_id}.txt"
        ann_path = directory / f"{doc.doc_id}.ann"
        for path in (txt_path, ann_path):
            if path.exists() and not force:
                raise FileExistsError(
                    f"{path} exists; pass force to overwrite")
        txt_path.write_text(text, encoding="utf-8")
        ann_path.write_text(ann, encoding="utf-8")


def atomic_write_text(path: Path | str, content: str):
    """Write via a temp file in the same directory plus rename, so readers
    never observe a half-written file."""
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp-{os.getpid()}")
    tmp.write_text(content, encoding="utf-8")
    os.replace(tmp, path)
