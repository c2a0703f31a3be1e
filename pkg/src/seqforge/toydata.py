"""A small deterministic corpus for integration tests and demos.

Three entity categories over disjoint lexicons and repetitive sentence
patterns, so a scaled-down model can reach perfect training F1 within a
couple of thousand updates. Sentence specs use `[CAT phrase]` brackets;
the builder turns them into text plus character-offset spans.
"""
from __future__ import annotations

import re
from pathlib import Path

from .corpus import Document, EntitySpan
from .formats import write_brat_directory

_SPAN_SPEC = re.compile(r"\[(\w+) ([^\]]+)\]")

TRAIN_SENTENCES = [
    "[PER alice] visited [LOC boston] .",
    "[PER bob] works at [ORG acme] .",
    "[PER carol] visited [LOC paris] .",
    "[ORG globex] opened in [LOC tokyo] .",
    "[PER dave] met [PER alice] in [LOC oslo] .",
    "[ORG acme] hired [PER carol] .",
    "[PER bob] visited [LOC new york] .",
    "[ORG initech] opened in [LOC boston] .",
    "[PER alice] works at [ORG globex] .",
    "[PER carol] met [PER bob] in [LOC paris] .",
    "[PER dave] visited [LOC tokyo] .",
    "[ORG initech] hired [PER dave] .",
    "[PER alice] met [PER carol] in [LOC new york] .",
    "[ORG globex] hired [PER bob] .",
    "[PER dave] works at [ORG initech] .",
    "[PER bob] met [PER dave] in [LOC boston] .",
    "[PER carol] works at [ORG acme] .",
    "[PER alice] visited [LOC oslo] .",
    "[ORG acme] opened in [LOC new york] .",
    "[PER carol] visited [LOC tokyo] .",
]

VALID_SENTENCES = [
    "[PER bob] visited [LOC oslo] .",
    "[PER alice] works at [ORG acme] .",
    "[ORG globex] opened in [LOC paris] .",
    "[PER dave] met [PER carol] in [LOC tokyo] .",
    "[ORG initech] hired [PER alice] .",
    "[PER carol] visited [LOC new york] .",
]

TEST_SENTENCES = [
    "[PER dave] visited [LOC paris] .",
    "[ORG acme] hired [PER alice] .",
    "[PER bob] works at [ORG globex] .",
    "[PER alice] met [PER bob] in [LOC tokyo] .",
]

DEPLOY_TEXTS = [
    "carol visited boston .\ndave works at acme .",
    "globex hired carol .",
]


def build_document(doc_id: str, sentence_specs: list[str]) -> Document:
    """Assemble bracket-annotated sentences (joined by newlines) into a
    Document with offset-correct spans."""
    parts: list[str] = []
    spans: list[EntitySpan] = []
    offset = 0
    for i, spec in enumerate(sentence_specs):
        if i > 0:
            parts.append("\n")
            offset += 1
        pos = 0
        for m in _SPAN_SPEC.finditer(spec):
            literal = spec[pos:m.start()]
            parts.append(literal)
            offset += len(literal)
            category, phrase = m.group(1), m.group(2)
            spans.append(EntitySpan(
                id=f"T{len(spans) + 1}", category=category,
                start=offset, end=offset + len(phrase), surface=phrase))
            parts.append(phrase)
            offset += len(phrase)
            pos = m.end()
        tail = spec[pos:]
        parts.append(tail)
        offset += len(tail)
    return Document(doc_id=doc_id, text="".join(parts), spans=tuple(spans))


def _documents(prefix: str, sentences: list[str], per_doc: int = 2) -> list[Document]:
    docs = []
    for d in range(0, len(sentences), per_doc):
        chunk = sentences[d:d + per_doc]
        docs.append(build_document(f"{prefix}{d // per_doc:02d}", chunk))
    return docs


def write_toy_corpus(root: Path | str) -> Path:
    """Write the bundled corpus as BRAT split folders under `root`."""
    root = Path(root)
    write_brat_directory(_documents("train", TRAIN_SENTENCES), root / "train",
                         force=True)
    write_brat_directory(_documents("valid", VALID_SENTENCES), root / "valid",
                         force=True)
    write_brat_directory(_documents("test", TEST_SENTENCES), root / "test",
                         force=True)
    deploy_dir = root / "deploy"
    deploy_dir.mkdir(parents=True, exist_ok=True)
    for i, text in enumerate(DEPLOY_TEXTS):
        (deploy_dir / f"deploy{i:02d}.txt").write_text(text, encoding="utf-8")
    return root


TOY_CONFIG_TEXT = """\
[dataset]
dataset_folder               = {dataset_folder}

[character_lstm]
using_character_lstm         = True
char_embedding_dimension     = 8
char_lstm_dimension          = 8

[token_lstm]
token_embedding_dimension    = 16
token_lstm_dimension         = 16

[crf]
using_crf                    = True
random_initial_transitions   = True

[training]
dropout                      = 0.5
patience                     = 10
maximum_number_of_epochs     = 100
maximum_training_time        = 10
number_of_cpu_threads        = 1
# the production default (0.005) is sized for corpus-scale training; a
# 20-sentence corpus needs a larger step to converge within 100 epochs
learning_rate                = 0.1
seed                         = 42
"""


def toy_config_text(dataset_folder: Path | str) -> str:
    """The scaled-down training configuration for the bundled corpus."""
    return TOY_CONFIG_TEXT.format(dataset_folder=dataset_folder)
