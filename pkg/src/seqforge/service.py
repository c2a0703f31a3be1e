"""HTTP API behind the annotation UI: browse documents, accept span
corrections, run training/prediction jobs, and stream metric history.

The filesystem is the source of truth: annotations live in the BRAT pair
on disk (rewritten atomically), so external BRAT installations stay
interoperable. The job queue is in-memory and does not survive restarts;
metric history files do.
"""
from __future__ import annotations

import csv
import logging
import queue
import threading
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .config import Config
from .corpus import Document, EntitySpan, validate_document
from .errors import SeqforgeError
from .formats import atomic_write_text, load_dataset, parse_brat, write_brat
from .nn import load_model
from .training import EpochRecord, predict_split, train

logger = logging.getLogger(__name__)


class SpanIn(BaseModel):
    id: str | None = None
    category: str
    start: int
    end: int
    surface: str | None = None


class JobRequest(BaseModel):
    kind: str
    config: dict = {}
    model: str | None = None


@dataclass
class JobState:
    id: str
    kind: str                      # train | predict
    status: str = "queued"         # queued | running | done | failed
    completed: int = 0
    total: int = 0
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "id": self.id, "kind": self.kind, "status": self.status,
            "progress": {"completed": self.completed, "total": self.total},
            "message": self.message,
        }


def span_to_json(span: EntitySpan) -> dict:
    return {"id": span.id, "category": span.category, "start": span.start,
            "end": span.end, "surface": span.surface}


class AnnotationService:
    """All mutable service state plus the single background job worker."""

    def __init__(self, config: Config, output_root: Path | str = "output"):
        self.config = config
        self.dataset_folder = Path(config.dataset_folder)
        self.output_root = Path(output_root)
        self.jobs: dict[str, JobState] = {}
        self.lock = threading.RLock()
        self.history: list[dict] = []
        self.history_version = 0
        self.predictions: dict[str, tuple[EntitySpan, ...]] = {}
        self.latest_checkpoint: Path | None = None
        self._queue: queue.Queue[JobState] = queue.Queue()
        self._requests: dict[str, JobRequest] = {}
        self._load_persisted_history()
        self._worker = threading.Thread(target=self._run_jobs, daemon=True)
        self._worker.start()

    # --- documents ---------------------------------------------------------

    def list_documents(self, split: str | None = None) -> list[dict]:
        out = []
        for name, dataset_split in sorted(load_dataset(self.dataset_folder).items()):
            if split and name != split:
                continue
            for doc in dataset_split.documents:
                out.append({"id": f"{name}/{doc.doc_id}", "split": name,
                            "span_count": len(doc.spans)})
        return out

    def find_document(self, doc_key: str) -> tuple[str, Document] | None:
        if "/" not in doc_key:
            return None
        split, doc_id = doc_key.split("/", 1)
        txt_path = self.dataset_folder / split / f"{doc_id}.txt"
        if txt_path.exists():
            ann_path = txt_path.with_suffix(".ann")
            ann = (ann_path.read_text(encoding="utf-8")
                   if ann_path.exists() else "")
            return split, parse_brat(
                txt_path.read_text(encoding="utf-8"), ann, doc_id)
        split_docs = load_dataset(self.dataset_folder).get(split)
        if split_docs:
            for doc in split_docs.documents:
                if doc.doc_id == doc_id:
                    return split, doc
        return None

    def save_annotations(self, doc_key: str, doc: Document,
                         spans: list[EntitySpan]) -> list[dict] | None:
        """Validate then atomically rewrite the .ann file. Returns the
        violation list (None means saved)."""
        candidate = doc.with_spans(spans)
        violations = validate_document(candidate)
        if violations:
            return [
                {"code": v.code, "message": v.message, "span_id": v.span_id}
                for v in violations
            ]
        split, doc_id = doc_key.split("/", 1)
        ann_path = self.dataset_folder / split / f"{doc_id}.ann"
        _, ann = write_brat(candidate)
        atomic_write_text(ann_path, ann)
        return None

    # --- jobs ----------------------------------------------------------------

    def submit(self, request: JobRequest) -> JobState | None:
        """Queue a job; returns None when a train job is already active."""
        with self.lock:
            if request.kind == "train" and any(
                    j.kind == "train" and j.status in ("queued", "running")
                    for j in self.jobs.values()):
                return None
            job = JobState(id=f"job-{len(self.jobs) + 1}", kind=request.kind)
            self.jobs[job.id] = job
            self._requests[job.id] = request
            self._queue.put(job)
            return job

    def _run_jobs(self):
        while True:
            job = self._queue.get()
            request = self._requests[job.id]
            job.status = "running"
            try:
                if job.kind == "train":
                    self._run_train(job, request)
                else:
                    self._run_predict(job, request)
                job.status = "done"
            except (SeqforgeError, OSError, ValueError) as exc:
                job.status = "failed"
                job.message = f"{type(exc).__name__}: {exc}"
                logger.warning("job %s failed: %s", job.id, job.message)

    def _run_train(self, job: JobState, request: JobRequest):
        merged = {**self.config.to_dict(), **request.config}
        cfg = Config.from_dict(merged)
        job.total = cfg.maximum_number_of_epochs
        with self.lock:
            self.history = []
            self.history_version += 1

        def on_epoch(record: EpochRecord):
            job.completed = record.epoch
            with self.lock:
                self.history.extend(self._flatten(record))
                self.history_version += 1

        outcome = train(cfg, output_root=self.output_root, run_id=job.id,
                        on_epoch=on_epoch)
        with self.lock:
            self.latest_checkpoint = outcome.checkpoint_path
        job.message = (
            f"stopped ({outcome.stop_reason}) at epoch "
            f"{outcome.history[-1].epoch}; best valid F1 "
            f"{outcome.best_valid_f1:.1f} at epoch {outcome.best_epoch}")

    def _run_predict(self, job: JobState, request: JobRequest):
        checkpoint = (Path(request.model) if request.model
                      else self.latest_checkpoint)
        if checkpoint is None:
            raise SeqforgeError("no trained model available; train first")
        params, vocab, cfg = load_model(checkpoint)
        splits = load_dataset(self.dataset_folder)
        docs = [(name, doc) for name, split in sorted(splits.items())
                for doc in split.documents]
        job.total = len(docs)
        predictions: dict[str, tuple[EntitySpan, ...]] = {}
        out_dir = self.output_root / job.id / "predictions"
        by_split: dict[str, list[Document]] = {}
        for name, doc in docs:
            tagged = predict_split(params, vocab, cfg, [doc])[0]
            predictions[f"{name}/{doc.doc_id}"] = tagged.spans
            by_split.setdefault(name, []).append(tagged)
            job.completed += 1
        from .formats import write_brat_directory
        for name, tagged_docs in by_split.items():
            write_brat_directory(tagged_docs, out_dir / name, force=True)
        with self.lock:
            self.predictions.update(predictions)
        job.message = f"tagged {len(docs)} documents"

    # --- history -----------------------------------------------------------------

    @staticmethod
    def _flatten(record: EpochRecord) -> list[dict]:
        rows = []
        for split in ("train", "valid", "test"):
            m = record.metrics.get(split)
            if m is None:
                continue
            rows.append({
                "epoch": record.epoch, "split": split,
                "precision": m.precision, "recall": m.recall, "f1": m.f1,
                "loss": record.train_loss if split == "train" else None,
                "seconds": record.seconds,
            })
        return rows

    def _load_persisted_history(self):
        candidates = sorted(self.output_root.glob("*/metrics.csv"),
                            key=lambda p: p.stat().st_mtime)
        if not candidates:
            return
        with open(candidates[-1], newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                self.history.append({
                    "epoch": int(row["epoch"]), "split": row["split"],
                    "precision": float(row["precision"]),
                    "recall": float(row["recall"]), "f1": float(row["f1"]),
                    "loss": float(row["loss"]) if row["loss"] else None,
                    "seconds": float(row["seconds"]),
                })
        self.history_version += 1


def create_app(config: Config, output_root: Path | str = "output",
               ui_dir: Path | str | None = None) -> FastAPI:
    """Build the FastAPI application around an AnnotationService."""
    service = AnnotationService(config, output_root)
    app = FastAPI(title="seqforge annotation service")
    app.state.service = service
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"])

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.get("/api/documents")
    def list_documents(split: str | None = None):
        return service.list_documents(split)

    @app.put("/api/documents/{doc_key:path}/annotations")
    def put_annotations(doc_key: str, spans: list[SpanIn]):
        found = service.find_document(doc_key)
        if found is None:
            return JSONResponse({"error": "unknown document"}, status_code=404)
        split, doc = found
        txt_path = service.dataset_folder / split / f"{doc.doc_id}.txt"
        if not txt_path.exists():
            return JSONResponse(
                {"error": "document is not BRAT-backed; cannot edit"},
                status_code=409)
        entity_spans = []
        for i, s in enumerate(spans):
            surface = (s.surface if s.surface is not None
                       else doc.text[s.start:s.end])
            entity_spans.append(EntitySpan(
                id=s.id or f"T{i + 1}", category=s.category,
                start=s.start, end=s.end, surface=surface))
        violations = service.save_annotations(doc_key, doc, entity_spans)
        if violations is not None:
            return JSONResponse({"violations": violations}, status_code=422)
        return {"spans": [span_to_json(s) for s in entity_spans]}

    @app.get("/api/documents/{doc_key:path}")
    def get_document(doc_key: str):
        found = service.find_document(doc_key)
        if found is None:
            return JSONResponse({"error": "unknown document"}, status_code=404)
        split, doc = found
        body = {
            "id": doc_key, "split": split, "text": doc.text,
            "spans": [span_to_json(s) for s in doc.spans],
        }
        predicted = service.predictions.get(doc_key)
        if predicted is not None:
            body["predicted"] = [span_to_json(s) for s in predicted]
        return body

    @app.post("/api/jobs", status_code=202)
    def post_job(request: JobRequest):
        if request.kind not in ("train", "predict"):
            return JSONResponse(
                {"error": f"unknown job kind {request.kind!r}"},
                status_code=422)
        job = service.submit(request)
        if job is None:
            return JSONResponse(
                {"error": "a training job is already running"},
                status_code=409)
        return {"id": job.id}

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str):
        job = service.jobs.get(job_id)
        if job is None:
            return JSONResponse({"error": "unknown job"}, status_code=404)
        return job.to_dict()

    @app.get("/api/metrics/history")
    def metrics_history(request: Request):
        with service.lock:
            etag = f'"h{service.history_version}-{len(service.history)}"'
            if request.headers.get("if-none-match") == etag:
                return Response(status_code=304)
            body = {"series": list(service.history)}
        return JSONResponse(body, headers={"ETag": etag})

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    else:
        @app.get("/", response_class=HTMLResponse)
        def index():
            return ("<html><body><h1>seqforge</h1><p>The annotation UI is "
                    "not built; the JSON API lives under /api/.</p>"
                    "</body></html>")

    return app
