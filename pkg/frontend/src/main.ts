/** DOM wiring for the annotation workbench: document browser, span
 * editor, and the training panel with its live learning curve. */
import {
  ApiError,
  ValidationError,
  getDocument,
  getHistory,
  getJob,
  listDocuments,
  putAnnotations,
  startJob,
} from './api.js';
import { chartGeometry } from './chart.js';
import { categoryColor } from './colors.js';
import { computeSegments, selectionOffset } from './highlight.js';
import { pollJob } from './poll.js';
import { EditorState } from './state.js';
import type { DocumentSummary, JobState, MetricPoint } from './types.js';

const $ = <T extends HTMLElement>(id: string): T =>
  document.getElementById(id) as T;

const state = new EditorState();
let currentDocId: string | null = null;
let historyEtag: string | null = null;
let jobRunning = false;

const SPLIT_COLORS: Record<string, string> = {
  train: '#9e9e9e',
  valid: '#1976d2',
  test: '#43a047',
};

// --- document list -----------------------------------------------------------

async function refreshDocumentList(): Promise<void> {
  const docs = await listDocuments();
  const bySplit = new Map<string, DocumentSummary[]>();
  for (const doc of docs) {
    const bucket = bySplit.get(doc.split) ?? [];
    bucket.push(doc);
    bySplit.set(doc.split, bucket);
  }
  const list = $('doc-list');
  list.textContent = '';
  for (const [split, entries] of [...bySplit.entries()].sort()) {
    const header = document.createElement('li');
    header.className = 'split-header';
    header.textContent = split;
    list.appendChild(header);
    for (const entry of entries) {
      const item = document.createElement('li');
      item.className = 'doc-entry';
      if (entry.id === currentDocId) item.classList.add('active');
      item.textContent = `${entry.id.split('/')[1]} (${entry.span_count})`;
      item.onclick = () => void openDocument(entry.id);
      list.appendChild(item);
    }
  }
}

// --- document view -------------------------------------------------------------

async function openDocument(id: string): Promise<void> {
  if (state.dirty && !window.confirm('Discard unsaved annotation edits?')) {
    return;
  }
  const doc = await getDocument(id);
  currentDocId = id;
  state.load(doc.text, doc.spans, doc.predicted ?? []);
  $('doc-title').textContent = id;
  render();
  void refreshDocumentList();
}

function render(): void {
  const container = $('text');
  container.textContent = '';
  hidePopup();
  for (const segment of computeSegments(state.text, state.all())) {
    const node = document.createElement('span');
    node.className = 'seg';
    node.dataset.start = String(segment.start);
    node.textContent = segment.text;
    if (segment.spanIds.length) {
      const span = state.get(segment.spanIds[0]);
      if (span) {
        node.classList.add('marked', span.provenance);
        node.style.backgroundColor = categoryColor(span.category);
        node.title = `${span.category} (${span.provenance})`;
        if (segment.opensSpan) node.classList.add('opens');
        node.onclick = (event) => {
          event.stopPropagation();
          openSpanEditor(segment.spanIds[0], event.clientX, event.clientY);
        };
      }
    }
    if (segment.predictedIds.length) {
      node.classList.add('predicted-underline');
      const categories = segment.predictedIds
        .map((pid) => state.all().find((s) => s.id === pid)?.category)
        .filter(Boolean)
        .join(', ');
      node.title = (node.title ? `${node.title} | ` : '') +
        `predicted: ${categories}`;
    }
    container.appendChild(node);
  }
  updateDirtyBadge();
  renderLegend();
}

function renderLegend(): void {
  const legend = $('legend');
  legend.textContent = '';
  for (const category of state.categories()) {
    const chip = document.createElement('span');
    chip.className = 'chip';
    chip.style.backgroundColor = categoryColor(category);
    chip.textContent = category;
    legend.appendChild(chip);
  }
}

function updateDirtyBadge(): void {
  $('dirty').hidden = !state.dirty;
  ($('save') as HTMLButtonElement).disabled = !state.dirty;
  ($('revert') as HTMLButtonElement).disabled = !state.dirty;
}

// --- span editing ----------------------------------------------------------------

function selectedRange(): [number, number] | null {
  const selection = window.getSelection();
  if (!selection || selection.isCollapsed || selection.rangeCount === 0) {
    return null;
  }
  const range = selection.getRangeAt(0);
  const startSeg = (range.startContainer.parentElement as HTMLElement | null)
    ?.closest<HTMLElement>('.seg');
  const endSeg = (range.endContainer.parentElement as HTMLElement | null)
    ?.closest<HTMLElement>('.seg');
  if (!startSeg?.dataset.start || !endSeg?.dataset.start) return null;
  const start = selectionOffset(Number(startSeg.dataset.start), range.startOffset);
  const end = selectionOffset(Number(endSeg.dataset.start), range.endOffset);
  return start < end ? [start, end] : null;
}

function openCategoryPicker(start: number, end: number, x: number, y: number): void {
  const apply = (category: string) => {
    if (category.trim()) state.addSpan(start, end, category.trim());
    render();
  };
  showPopup(x, y, `annotate "${state.text.slice(start, end)}"`, apply, null);
}

function openSpanEditor(id: string, x: number, y: number): void {
  const span = state.get(id);
  if (!span) return;
  const apply = (category: string) => {
    if (category.trim()) state.changeCategory(id, category.trim());
    render();
  };
  const remove = () => {
    state.deleteSpan(id);
    render();
  };
  showPopup(x, y, `${span.surface} [${span.category}]`, apply, remove);
}

function showPopup(
  x: number,
  y: number,
  label: string,
  onApply: (category: string) => void,
  onDelete: (() => void) | null,
): void {
  const popup = $('popup');
  popup.hidden = false;
  popup.style.left = `${x}px`;
  popup.style.top = `${y + 12}px`;
  $('popup-label').textContent = label;
  const input = $('popup-category') as HTMLInputElement;
  input.value = '';
  const datalist = $('known-categories');
  datalist.textContent = '';
  for (const category of state.categories()) {
    const option = document.createElement('option');
    option.value = category;
    datalist.appendChild(option);
  }
  ($('popup-apply') as HTMLButtonElement).onclick = () => {
    hidePopup();
    onApply(input.value);
  };
  const deleteButton = $('popup-delete') as HTMLButtonElement;
  deleteButton.hidden = onDelete === null;
  deleteButton.onclick = () => {
    hidePopup();
    onDelete?.();
  };
  input.focus();
}

function hidePopup(): void {
  $('popup').hidden = true;
}

async function save(): Promise<void> {
  if (!currentDocId) return;
  setNotice('');
  try {
    const stored = await putAnnotations(currentDocId, state.toPayload());
    state.committed(stored);
    render();
    setNotice('saved', 'ok');
    void refreshDocumentList();
  } catch (err) {
    if (err instanceof ValidationError) {
      const lines = err.violations.map((v) => `${v.code}: ${v.message}`);
      setNotice(`rejected:\n${lines.join('\n')}`, 'error');
    } else {
      setNotice(String(err), 'error');
    }
  }
}

function setNotice(text: string, kind: 'ok' | 'error' | '' = ''): void {
  const notice = $('notice');
  notice.textContent = text;
  notice.className = kind;
}

// --- training panel -----------------------------------------------------------------

function drawChart(series: MetricPoint[]): void {
  const box = { width: 420, height: 180, padding: 26 };
  const geometry = chartGeometry(series, box);
  const svg = $('curve');
  svg.textContent = '';
  const ns = 'http://www.w3.org/2000/svg';
  for (const y of geometry.gridY) {
    const line = document.createElementNS(ns, 'line');
    line.setAttribute('x1', String(box.padding));
    line.setAttribute('x2', String(box.width - box.padding));
    line.setAttribute('y1', String(y));
    line.setAttribute('y2', String(y));
    line.setAttribute('class', 'grid');
    svg.appendChild(line);
  }
  for (const [split, points] of geometry.lines) {
    if (!points) continue;
    const polyline = document.createElementNS(ns, 'polyline');
    polyline.setAttribute('points', points);
    polyline.setAttribute('fill', 'none');
    polyline.setAttribute('stroke', SPLIT_COLORS[split] ?? '#555');
    polyline.setAttribute('stroke-width', '2');
    svg.appendChild(polyline);
  }
  const caption = $('curve-caption');
  const validPoints = series.filter((p) => p.split === 'valid');
  const last = validPoints[validPoints.length - 1];
  caption.textContent = last
    ? `epoch ${geometry.maxEpoch}: valid F1 ${last.f1.toFixed(1)}`
    : 'no training history yet';
}

async function refreshHistory(): Promise<void> {
  const result = await getHistory(historyEtag);
  historyEtag = result.etag;
  if (!result.notModified) drawChart(result.series);
}

async function retrain(): Promise<void> {
  const button = $('retrain') as HTMLButtonElement;
  button.disabled = true;
  setJobStatus('starting training job...');
  try {
    const { id } = await startJob('train');
    jobRunning = true;
    const poller = window.setInterval(() => void refreshHistory(), 2000);
    try {
      await pollJob(getJob, id, {
        intervalMs: 2000,
        onUpdate: (job: JobState) => {
          setJobStatus(
            `training ${job.status}: epoch ` +
            `${job.progress.completed}/${job.progress.total}`);
        },
      });
      setJobStatus('training done; tagging documents...');
      const predict = await startJob('predict');
      await pollJob(getJob, predict.id, { intervalMs: 2000 });
      setJobStatus('model retrained and predictions refreshed');
      if (currentDocId) await openDocument(currentDocId);
    } finally {
      window.clearInterval(poller);
      await refreshHistory();
    }
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      setJobStatus('a training job is already running; try again later');
    } else {
      setJobStatus(`job failed: ${err}`);
    }
  } finally {
    jobRunning = false;
    button.disabled = false;
  }
}

function setJobStatus(text: string): void {
  $('job-status').textContent = text;
}

// --- boot ----------------------------------------------------------------------------

export function boot(): void {
  $('save').onclick = () => void save();
  $('revert').onclick = () => {
    if (currentDocId) void openDocument(currentDocId);
  };
  $('retrain').onclick = () => void retrain();
  $('text').onmouseup = (event) => {
    const range = selectedRange();
    if (range) {
      openCategoryPicker(range[0], range[1],
        (event as MouseEvent).clientX, (event as MouseEvent).clientY);
    }
  };
  document.body.addEventListener('click', (event) => {
    const popup = $('popup');
    if (!popup.hidden && !popup.contains(event.target as Node)) hidePopup();
  }, true);
  window.addEventListener('beforeunload', (event) => {
    if (state.dirty || jobRunning) {
      event.preventDefault();
      event.returnValue = '';
    }
  });
  void refreshDocumentList();
  void refreshHistory();
}

boot();
