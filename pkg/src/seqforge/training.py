"""The epoch loop: seeded shuffling, one SGD update per sentence,
entity-level evaluation per split, validation-based early stopping with a
wall-clock budget, and best-checkpoint bookkeeping.

The loop itself is sequential; per-epoch evaluation may fan out across
documents up to `number_of_cpu_threads` read-only workers.
"""
from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import Config
from .corpus import (
    DatasetSplit,
    Document,
    LabeledSentence,
    bio_to_bioes,
    bioes_to_bio,
    labels_to_spans,
)
from .embeddings import (
    EmbeddingTable,
    Vocabulary,
    build_vocab,
    load_embeddings,
    lookup_chars,
    lookup_token,
)
from .errors import EmptySplit
from .evaluation import evaluate_entities
from .formats import load_dataset, segment_document, write_brat_directory
from .nn import (
    ModelParams,
    NetConfig,
    init_params,
    decode,
    save_model,
    load_model,
    sentence_gradients,
    sentence_loss,
    sgd_step,
)

logger = logging.getLogger(__name__)

METRICS_HEADER = ("epoch", "split", "precision", "recall", "f1", "loss", "seconds")

STOP_PATIENCE = "patience"
STOP_MAX_EPOCHS = "max_epochs"
STOP_TIME_BUDGET = "time_budget"


@dataclass
class SplitMetrics:
    precision: float
    recall: float
    f1: float


@dataclass
class EpochRecord:
    """Per-epoch scores for every evaluated split plus the mean training
    loss and the epoch's wall-clock duration."""

    epoch: int
    metrics: dict[str, SplitMetrics]
    train_loss: float
    seconds: float

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "seconds": self.seconds,
            "metrics": {
                name: {"precision": m.precision, "recall": m.recall, "f1": m.f1}
                for name, m in self.metrics.items()
            },
        }


@dataclass
class TrainOutcome:
    best_epoch: int
    best_valid_f1: float
    stop_reason: str
    checkpoint_path: Path
    history: list[EpochRecord] = field(default_factory=list)
    output_dir: Path | None = None


class EarlyStopper:
    """Tracks strict validation improvements; ties do not refresh patience."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best: float | None = None
        self.stale = 0

    def update(self, score: float) -> bool:
        if self.best is None or score > self.best:
            self.best = score
            self.stale = 0
            return True
        self.stale += 1
        return False

    @property
    def exhausted(self) -> bool:
        return self.stale > self.patience


def stop_reason(stopper: EarlyStopper, epoch: int, config: Config,
                elapsed_hours: float) -> str | None:
    """The stopping rule, checked at epoch boundaries in fixed order."""
    if stopper.exhausted:
        return STOP_PATIENCE
    if epoch >= config.maximum_number_of_epochs:
        return STOP_MAX_EPOCHS
    if elapsed_hours > config.maximum_training_time:
        return STOP_TIME_BUDGET
    return None


@dataclass
class EncodedSentence:
    tokens: tuple
    token_ids: np.ndarray
    char_ids: list[list[int]]
    gold_ids: np.ndarray | None


def encode_sentence(vocab: Vocabulary, sentence: LabeledSentence,
                    tagging_format: str = "bio",
                    with_gold: bool = True) -> EncodedSentence:
    token_ids = np.asarray(
        [lookup_token(vocab, t.text) for t in sentence.tokens], dtype=np.intp)
    char_ids = [lookup_chars(vocab, t.text) for t in sentence.tokens]
    gold_ids = None
    if with_gold:
        labels = sentence.labels
        if tagging_format == "bioes":
            labels = bio_to_bioes(labels)
        gold_ids = np.asarray(
            [vocab.label_index[l] for l in labels], dtype=np.intp)
    return EncodedSentence(tokens=sentence.tokens, token_ids=token_ids,
                           char_ids=char_ids, gold_ids=gold_ids)


def predict_document(params: ModelParams, net_cfg: NetConfig,
                     vocab: Vocabulary, doc: Document,
                     tagging_format: str = "bio") -> Document:
    """Tag one document: Viterbi (or argmax) per sentence, then decode the
    labels into spans. Deterministic; documents lacking sentences are
    segmented first."""
    if not doc.sentences:
        doc = segment_document(doc, snap=True)
    spans = []
    sentences = []
    for sentence in doc.sentences:
        enc = encode_sentence(vocab, sentence, with_gold=False)
        indices = decode(params, net_cfg, enc.token_ids, enc.char_ids)
        labels = [vocab.labels[i] for i in indices]
        if tagging_format == "bioes":
            labels = bioes_to_bio(labels)
        spans.extend(labels_to_spans(
            list(sentence.tokens), labels, text=doc.text,
            first_id=len(spans) + 1))
        sentences.append(LabeledSentence(sentence.tokens, tuple(labels)))
    return Document(doc_id=doc.doc_id, text=doc.text, spans=tuple(spans),
                    sentences=tuple(sentences))


def predict_split(params: ModelParams, vocab: Vocabulary, config: Config,
                  documents) -> list[Document]:
    """Tag a document collection, fanning out across documents up to the
    configured worker count (parameters are shared read-only)."""
    net_cfg = NetConfig.from_config(config, vocab)

    def tag(doc):
        return predict_document(params, net_cfg, vocab, doc,
                                config.tagging_format)

    docs = list(documents)
    if config.number_of_cpu_threads > 1 and len(docs) > 1:
        with ThreadPoolExecutor(config.number_of_cpu_threads) as pool:
            return list(pool.map(tag, docs))
    return [tag(doc) for doc in docs]


def _segmented_split(split: DatasetSplit, snap: bool = False) -> DatasetSplit:
    docs = tuple(
        doc if doc.sentences else segment_document(doc, snap=snap)
        for doc in split.documents)
    return DatasetSplit(name=split.name, documents=docs)


def _unique_run_dir(root: Path, run_id: str | None) -> Path:
    if run_id is not None:
        path = root / run_id
        path.mkdir(parents=True, exist_ok=True)
        return path
    stamp = time.strftime("run-%Y%m%d-%H%M%S")
    for i in range(1000):
        path = root / (stamp if i == 0 else f"{stamp}-{i}")
        try:
            path.mkdir(parents=True)
            return path
        except FileExistsError:
            continue
    raise RuntimeError("cannot allocate a run directory")


class _MetricsWriter:
    def __init__(self, path: Path):
        self.path = path
        with open(path, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerow(METRICS_HEADER)

    def append(self, record: EpochRecord):
        with open(self.path, "a", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            for split in ("train", "valid", "test"):
                m = record.metrics.get(split)
                if m is None:
                    continue
                loss = f"{record.train_loss:.6f}" if split == "train" else ""
                writer.writerow([
                    record.epoch, split, f"{m.precision:.1f}", f"{m.recall:.1f}",
                    f"{m.f1:.1f}", loss, f"{record.seconds:.3f}"])


def train(config: Config, output_root: Path | str = "output",
          run_id: str | None = None, clock=time.monotonic,
          on_epoch=None) -> TrainOutcome:
    """Run the full training loop and return the outcome.

    `clock` is injectable so tests can make the wall-clock columns and the
    time-budget rule deterministic; `on_epoch` (if given) receives each
    EpochRecord as it completes.
    """
    started = clock()
    splits = load_dataset(config.dataset_folder)
    for required in ("train", "valid"):
        if required not in splits or not splits[required].documents:
            raise EmptySplit(f"dataset has no non-empty {required!r} split")

    train_split = _segmented_split(splits["train"])
    valid_split = _segmented_split(splits["valid"])
    test_split = _segmented_split(splits["test"]) if "test" in splits else None
    deploy_split = (_segmented_split(splits["deploy"], snap=True)
                    if "deploy" in splits else None)

    table: EmbeddingTable | None = None
    if config.token_emb_pretrained_file:
        table = load_embeddings(config.token_emb_pretrained_file,
                                config.token_embedding_dimension)

    extra = tuple(s for s in (valid_split, test_split, deploy_split) if s)
    vocab = build_vocab(train_split, table, extra_splits=extra,
                        only_corpus_embeddings=config.vocab_only_embedded,
                        tagging_format=config.tagging_format)
    net_cfg = NetConfig.from_config(config, vocab)
    params = init_params(config, vocab, table, config.seed)
    rng = np.random.default_rng(config.seed)

    output_dir = _unique_run_dir(Path(output_root), run_id)
    (output_dir / "checkpoints").mkdir(exist_ok=True)
    checkpoint_path = output_dir / "checkpoints" / "best.ckpt"
    metrics = _MetricsWriter(output_dir / "metrics.csv")

    encoded = [
        encode_sentence(vocab, sentence, config.tagging_format)
        for doc in train_split.documents for sentence in doc.sentences
    ]
    if not encoded:
        raise EmptySplit("training split has no sentences")

    eval_splits = [("train", train_split), ("valid", valid_split)]
    if test_split:
        eval_splits.append(("test", test_split))

    stopper = EarlyStopper(config.patience)
    history: list[EpochRecord] = []
    best_epoch = 0
    reason = STOP_MAX_EPOCHS
    epoch = 0
    while True:
        epoch += 1
        epoch_started = clock()
        order = rng.permutation(len(encoded))
        losses = np.empty(len(order))
        for j, idx in enumerate(order):
            sent = encoded[idx]
            loss, cache = sentence_loss(
                params, net_cfg, sent.token_ids, sent.char_ids, sent.gold_ids,
                dropout=config.dropout, training=True, rng=rng)
            grads = sentence_gradients(params, net_cfg, cache)
            sgd_step(params, grads, config.learning_rate, config.gradient_clip)
            losses[j] = loss

        record = EpochRecord(
            epoch=epoch, metrics={}, train_loss=float(losses.mean()),
            seconds=0.0)
        for name, split in eval_splits:
            predicted = predict_split(params, vocab, config, split.documents)
            report = evaluate_entities(split.documents, predicted)
            record.metrics[name] = SplitMetrics(
                precision=report.precision, recall=report.recall, f1=report.f1)
        record.seconds = clock() - epoch_started
        history.append(record)
        metrics.append(record)
        if on_epoch is not None:
            on_epoch(record)

        valid_f1 = record.metrics["valid"].f1
        if stopper.update(valid_f1):
            best_epoch = epoch
            save_model(params, vocab, config, checkpoint_path)
        logger.info(
            "epoch %d: train f1 %.1f, valid f1 %.1f, loss %.4f",
            epoch, record.metrics["train"].f1, valid_f1, record.train_loss)

        elapsed_hours = (clock() - started) / 3600.0
        decided = stop_reason(stopper, epoch, config, elapsed_hours)
        if decided:
            reason = decided
            break

    best_params, best_vocab, best_config = load_model(checkpoint_path)
    for split in (valid_split, test_split, deploy_split):
        if split is None:
            continue
        predicted = predict_split(best_params, best_vocab, best_config,
                                  split.documents)
        write_brat_directory(
            predicted, output_dir / "predictions" / split.name, force=True)

    return TrainOutcome(
        best_epoch=best_epoch, best_valid_f1=float(stopper.best),
        stop_reason=reason, checkpoint_path=checkpoint_path,
        history=history, output_dir=output_dir)
