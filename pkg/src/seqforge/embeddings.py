"""Pretrained token vectors and the token/character/label index spaces.

The embedding file format is the GloVe text layout (token followed by D
space-separated numbers per line); a leading word2vec-style "count dim"
header line is detected and skipped. Tables and vocabularies are immutable
once built.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import DatasetSplit, expand_labels, label_category
from .errors import EmptySplit, EmptyTable, FileUnreadable

logger = logging.getLogger(__name__)

PAD = "<PAD>"
UNK = "<UNK>"
PAD_INDEX = 0
UNK_INDEX = 1


@dataclass(frozen=True)
class EmbeddingTable:
    """Dense pretrained vectors keyed by token string."""

    dimension: int
    vectors: dict[str, np.ndarray]

    def __contains__(self, token: str) -> bool:
        return token in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)

    def get(self, token: str) -> np.ndarray | None:
        return self.vectors.get(token)


@dataclass(frozen=True)
class Vocabulary:
    """Token, character, and label index spaces. Index 0 is padding and
    index 1 the unknown symbol for tokens and characters; label indices
    are dense from 0."""

    tokens: tuple[str, ...]
    chars: tuple[str, ...]
    labels: tuple[str, ...]
    token_index: dict[str, int]
    char_index: dict[str, int]
    label_index: dict[str, int]

    @staticmethod
    def from_parts(tokens, chars, labels) -> "Vocabulary":
        tokens = (PAD, UNK, *tokens)
        chars = (PAD, UNK, *chars)
        labels = tuple(labels)
        return Vocabulary(
            tokens=tokens,
            chars=chars,
            labels=labels,
            token_index={t: i for i, t in enumerate(tokens)},
            char_index={c: i for i, c in enumerate(chars)},
            label_index={l: i for i, l in enumerate(labels)},
        )

    @property
    def n_labels(self) -> int:
        return len(self.labels)


def load_embeddings(path: Path | str, expected_dimension: int) -> EmbeddingTable:
    """Load a GloVe-layout text file, skipping (and counting) lines whose
    arity does not match the expected dimension."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise FileUnreadable(f"cannot read embedding file {path}: {exc}")

    vectors: dict[str, np.ndarray] = {}
    skipped = 0
    for i, line in enumerate(lines):
        parts = line.rstrip().split(" ")
        if i == 0 and len(parts) == 2:
            try:
                int(parts[0]), int(parts[1])
                continue  # word2vec text header
            except ValueError:
                pass
        if len(parts) != expected_dimension + 1:
            skipped += 1
            continue
        try:
            vec = np.asarray([float(x) for x in parts[1:]], dtype=np.float64)
        except ValueError:
            skipped += 1
            continue
        if not np.all(np.isfinite(vec)):
            skipped += 1
            continue
        vectors[parts[0]] = vec
    if skipped:
        logger.warning("%s: skipped %d malformed embedding lines", path, skipped)
    if not vectors:
        raise EmptyTable(
            f"{path}: no lines matched dimension {expected_dimension}")
    return EmbeddingTable(dimension=expected_dimension, vectors=vectors)


def normalize_token(text: str) -> str:
    """Cascade key: lowercased with every decimal digit mapped to '0'."""
    return "".join("0" if ch.isdigit() else ch for ch in text.lower())


def lookup_token(vocab: Vocabulary, token: str) -> int:
    """Resolve a token to an index: exact match, then normalized form,
    then the unknown index. Never fails."""
    idx = vocab.token_index.get(token)
    if idx is not None:
        return idx
    idx = vocab.token_index.get(normalize_token(token))
    if idx is not None:
        return idx
    return UNK_INDEX


def lookup_chars(vocab: Vocabulary, token: str) -> list[int]:
    """Per-character indices for a token, unknown characters mapped to UNK."""
    return [vocab.char_index.get(ch, UNK_INDEX) for ch in token]


def _split_tokens(split: DatasetSplit) -> set[str]:
    return {
        token.text
        for doc in split.documents
        for sentence in doc.sentences
        for token in sentence.tokens
    }


def build_vocab(
    train: DatasetSplit,
    table: EmbeddingTable | None = None,
    extra_splits: tuple[DatasetSplit, ...] = (),
    only_corpus_embeddings: bool = False,
    tagging_format: str = "bio",
) -> Vocabulary:
    """Build the index spaces from the training split (which must be
    segmented and labeled) and, optionally, a pretrained table.

    Token entries are the training tokens plus the table's tokens; with
    `only_corpus_embeddings` the table contribution is restricted to tokens
    that occur in some split. Characters come from the training split only
    (case-sensitive); labels expand the training categories to the tagging
    scheme plus 'O'. Iteration order is lexicographic, so two builds over
    the same corpus are identical.
    """
    train_tokens = _split_tokens(train)
    if not train_tokens:
        raise EmptySplit("training split has no tokens")

    tokens = set(train_tokens)
    if table is not None:
        if only_corpus_embeddings:
            corpus_tokens = set(train_tokens)
            for split in extra_splits:
                corpus_tokens |= _split_tokens(split)
            tokens |= {t for t in table.vectors if t in corpus_tokens}
        else:
            tokens |= set(table.vectors)

    chars = {ch for token in train_tokens for ch in token}
    categories = {
        label_category(label)
        for doc in train.documents
        for sentence in doc.sentences
        for label in sentence.labels
        if label_category(label) is not None
    }
    labels = expand_labels(categories, tagging_format)
    return Vocabulary.from_parts(sorted(tokens), sorted(chars), labels)


def embedding_init_bound(dimension: int) -> float:
    """Half-width of the uniform init range for rows without a pretrained
    vector, variance-matched to typical pretrained tables."""
    return math.sqrt(3.0 / dimension)
