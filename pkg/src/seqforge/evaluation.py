"""Entity-level and token-level scoring.

An entity counts as correct only when its category and both character
offsets match exactly (the CoNLL shared-task convention), which makes the
metric independent of tokenization. Precision/recall with an empty
denominator are defined as 0, and all percentages are reported with one
decimal place.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .corpus import Document, spans_to_labels
from .errors import DocumentMismatch


@dataclass
class CategoryScore:
    precision: float
    recall: float
    f1: float
    support: int
    tp: int
    fp: int
    fn: int


@dataclass
class EvalReport:
    """Micro scores plus per-category breakdown; the confusion matrix is
    token-level (gold rows x predicted columns over `label_set`)."""

    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    per_category: dict[str, CategoryScore] = field(default_factory=dict)
    label_set: list[str] = field(default_factory=list)
    confusion: list[list[int]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "EvalReport":
        per_category = {
            cat: CategoryScore(**vals)
            for cat, vals in d.get("per_category", {}).items()
        }
        return EvalReport(
            precision=d["precision"], recall=d["recall"], f1=d["f1"],
            tp=d["tp"], fp=d["fp"], fn=d["fn"], per_category=per_category,
            label_set=list(d.get("label_set", [])),
            confusion=[list(row) for row in d.get("confusion", [])])


def prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """Precision/recall/F1 in percent, with the 0/0 convention."""
    precision = 100.0 * tp / (tp + fp) if tp + fp else 0.0
    recall = 100.0 * tp / (tp + fn) if tp + fn else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall else 0.0)
    return precision, recall, f1


def evaluate_entities(gold_docs, predicted_docs) -> EvalReport:
    """Exact-match entity scoring, micro-averaged over all documents.

    Documents are paired by id and must share their text.
    """
    gold_by_id = {d.doc_id: d for d in gold_docs}
    pred_by_id = {d.doc_id: d for d in predicted_docs}
    if set(gold_by_id) != set(pred_by_id):
        missing = set(gold_by_id) ^ set(pred_by_id)
        raise DocumentMismatch(f"unpaired document ids: {sorted(missing)}")

    counts: dict[str, list[int]] = {}  # category -> [tp, fp, fn]
    for doc_id, gold in gold_by_id.items():
        pred = pred_by_id[doc_id]
        if gold.text != pred.text:
            raise DocumentMismatch(f"document {doc_id}: texts differ")
        gold_set = {(s.start, s.end, s.category) for s in gold.spans}
        pred_set = {(s.start, s.end, s.category) for s in pred.spans}
        for item in gold_set | pred_set:
            cat = item[2]
            entry = counts.setdefault(cat, [0, 0, 0])
            if item in gold_set and item in pred_set:
                entry[0] += 1
            elif item in pred_set:
                entry[1] += 1
            else:
                entry[2] += 1

    tp = sum(c[0] for c in counts.values())
    fp = sum(c[1] for c in counts.values())
    fn = sum(c[2] for c in counts.values())
    precision, recall, f1 = prf(tp, fp, fn)
    per_category = {}
    for cat in sorted(counts):
        ctp, cfp, cfn = counts[cat]
        cp, cr, cf = prf(ctp, cfp, cfn)
        per_category[cat] = CategoryScore(
            precision=cp, recall=cr, f1=cf, support=ctp + cfn,
            tp=ctp, fp=cfp, fn=cfn)
    return EvalReport(precision=precision, recall=recall, f1=f1,
                      tp=tp, fp=fp, fn=fn, per_category=per_category)


def confusion_matrix(gold_labels, predicted_labels,
                     label_set=None) -> tuple[list[str], list[list[int]]]:
    """Token-level K x K counts: cell [i][j] counts tokens with gold label
    i predicted as label j."""
    gold_labels = list(gold_labels)
    predicted_labels = list(predicted_labels)
    if len(gold_labels) != len(predicted_labels):
        raise ValueError("gold and predicted label sequences differ in length")
    if label_set is None:
        label_set = sorted(set(gold_labels) | set(predicted_labels))
    index = {label: i for i, label in enumerate(label_set)}
    matrix = [[0] * len(label_set) for _ in label_set]
    for g, p in zip(gold_labels, predicted_labels):
        matrix[index[g]][index[p]] += 1
    return list(label_set), matrix


def evaluate_documents(gold_docs, predicted_docs, label_set=None) -> EvalReport:
    """Full report: entity scores plus the token-level confusion matrix
    derived by aligning both span sets to the gold tokenization."""
    report = evaluate_entities(gold_docs, predicted_docs)
    pred_by_id = {d.doc_id: d for d in predicted_docs}
    gold_seq: list[str] = []
    pred_seq: list[str] = []
    for gold in gold_docs:
        pred = pred_by_id[gold.doc_id]
        for sentence in gold.sentences:
            gold_seq.extend(sentence.labels)
            in_range = [s for s in pred.spans
                        if s.start < sentence.tokens[-1].end
                        and s.end > sentence.tokens[0].start]
            pred_seq.extend(
                spans_to_labels(sentence.tokens, in_range, snap=True))
    labels, matrix = confusion_matrix(gold_seq, pred_seq, label_set)
    report.label_set = labels
    report.confusion = matrix
    return report


def format_report(report: EvalReport) -> str:
    """Classification-report text: micro line plus one line per category,
    percentages at one decimal."""
    lines = [
        f"{'category':<12} {'precision':>9} {'recall':>9} {'f1':>9} {'support':>8}",
    ]
    for cat, score in report.per_category.items():
        lines.append(
            f"{cat:<12} {score.precision:>9.1f} {score.recall:>9.1f} "
            f"{score.f1:>9.1f} {score.support:>8d}")
    lines.append(
        f"{'micro':<12} {report.precision:>9.1f} {report.recall:>9.1f} "
        f"{report.f1:>9.1f} {report.tp + report.fn:>8d}")
    return "\n".join(lines)


def write_report(report: EvalReport, path: Path | str,
                 history: list[dict] | None = None) -> Path:
    """Write the report as JSON; when `history` rows are given, also write
    a `<stem>.series.json` companion with the F1-over-epoch series for
    external plotting."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True),
                    encoding="utf-8")
    if history is not None:
        companion = path.with_name(path.stem + ".series.json")
        companion.write_text(
            json.dumps({"series": history}, indent=2, sort_keys=True),
            encoding="utf-8")
    return path


def read_report(path: Path | str) -> EvalReport:
    with open(path, encoding="utf-8") as fh:
        return EvalReport.from_dict(json.load(fh))
