// DOM wiring for the review queue. Machine verdicts are rendered read-only;
// the only write path is the override POST.

import { ApiError, ReviewApi } from './api.js';
import { formatScore, LIKERT_MAX, STATEMENT_LABELS, WEIGHT_ORDER } from './score.js';
import {
  AppState,
  canSubmit,
  initialState,
  previewScore,
  removeResolved,
  selectItem,
  selectedItem,
  setLikert,
} from './state.js';
import type { QueueItem } from './types.js';

const POLL_INTERVAL_MS = 5000;

const api = new ReviewApi(
  window.location.origin,
  window.localStorage.getItem('review_token'),
);

let state: AppState = initialState();

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function bengali(tag: 'div' | 'p' | 'blockquote', text: string, className?: string): HTMLElement {
  const node = el(tag, className, text);
  node.lang = 'bn';
  return node;
}

// ---------------------------------------------------------------------------
// data loading

async function refreshQueue(): Promise<void> {
  try {
    const [queue, progress] = await Promise.all([
      api.fetchQueue(state.statusFilter),
      api.fetchProgress(),
    ]);
    state = { ...state, items: queue.items, progress, banner: null };
  } catch (error) {
    state = {
      ...state,
      banner: {
        kind: 'error',
        message: `Cannot reach the review service: ${error instanceof Error ? error.message : error}`,
      },
    };
  }
  render();
}

async function pollProgress(): Promise<void> {
  try {
    const progress = await api.fetchProgress();
    state = { ...state, progress };
    renderHeader();
  } catch {
    // transient poll failures stay silent; the next queue action surfaces them
  }
}

// ---------------------------------------------------------------------------
// submission

async function submit(): Promise<void> {
  const item = selectedItem(state);
  if (item === null || !canSubmit(state.draft, state.submitting)) return;
  state = { ...state, submitting: true };
  render();
  try {
    const result = await api.submitOverride({
      verdict_ref: item.verdict_ref,
      likert_comprehension: state.draft.likert[0]!,
      likert_factual: state.draft.likert[1]!,
      likert_completeness: state.draft.likert[2]!,
      likert_clarity: state.draft.likert[3]!,
      likert_length: state.draft.likert[4]!,
      script_valid: state.draft.scriptValid,
      note: state.draft.note,
      viewed_machine_reasoning: state.draft.viewedMachineReasoning,
    });
    state = removeResolved({ ...state, submitting: false }, item.verdict_ref);
    state = {
      ...state,
      banner: result.was_resolved
        ? {
            kind: 'conflict',
            message: `Item ${item.verdict_ref} had already been resolved elsewhere; your override replaced it (last write wins).`,
          }
        : { kind: 'info', message: `Saved override for ${item.verdict_ref}: score ${formatScore(result.final_score)}` },
    };
    await pollProgress();
  } catch (error) {
    const message =
      error instanceof ApiError ? `Server rejected the override: ${error.detail}` : String(error);
    state = { ...state, submitting: false, banner: { kind: 'error', message } };
  }
  render();
}

// ---------------------------------------------------------------------------
// rendering

function renderHeader(): void {
  const counts = document.getElementById('counts');
  if (counts && state.progress) {
    let text = `${state.progress.pending} pending / ${state.progress.resolved} resolved of ${state.progress.total}`;
    if (state.progress.verdicts) {
      text += ` · run: ${state.progress.verdicts.ok} ok, ${state.progress.verdicts.failed} failed verdicts`;
    }
    counts.textContent = text;
  }
}

function renderBanner(parent: HTMLElement): void {
  if (!state.banner) return;
  const banner = el('div', `banner banner-${state.banner.kind}`, state.banner.message);
  if (state.banner.kind === 'error') {
    const retry = el('button', 'retry', 'Retry');
    retry.addEventListener('click', () => void refreshQueue());
    banner.appendChild(retry);
  }
  parent.appendChild(banner);
}

function renderList(parent: HTMLElement): void {
  const list = el('ul', 'queue-list');
  if (state.items.length === 0) {
    parent.appendChild(el('p', 'empty', 'No pending items.'));
    return;
  }
  for (const item of state.items) {
    const row = el('li', item.verdict_ref === state.selectedRef ? 'row selected' : 'row');
    const label = el(
      'button',
      'row-button',
      `${item.question_id} · ${item.dialect} · ${item.model_name} (confidence ${item.payload.machine.confidence})`,
    );
    label.addEventListener('click', () => {
      state = selectItem(state, item.verdict_ref);
      render();
    });
    row.appendChild(label);
    list.appendChild(row);
  }
  parent.appendChild(list);
}

function renderQuadruple(parent: HTMLElement, item: QueueItem): void {
  const grid = el('div', 'quadruple');
  const block = (title: string, text: string) => {
    const cell = el('section', 'cell');
    cell.appendChild(el('h3', undefined, title));
    cell.appendChild(bengali('blockquote', text));
    grid.appendChild(cell);
  };
  block('Standard question', item.payload.standard_question);
  block(`${item.dialect} question`, item.payload.dialect_question);
  block('Standard response', item.payload.standard_response);
  block(`${item.dialect} response`, item.payload.dialect_response);
  parent.appendChild(grid);
}

function renderMachineVerdict(parent: HTMLElement, item: QueueItem): void {
  const machine = item.payload.machine;
  const details = el('details', 'machine');
  const summary = el(
    'summary',
    undefined,
    `Machine verdict (score ${formatScore(machine.final_score)}, confidence ${machine.confidence}) - expand to view reasoning`,
  );
  details.appendChild(summary);
  const body = el('div', 'machine-body');
  body.appendChild(
    el('p', 'likert-line', `Likert: [${machine.likert.join(', ')}], script ${machine.script_valid ? 'valid' : 'INVALID'}`),
  );
  body.appendChild(bengali('p', machine.reasoning, 'reasoning'));
  details.appendChild(body);
  details.addEventListener('toggle', () => {
    if (details.open) {
      state = { ...state, draft: { ...state.draft, viewedMachineReasoning: true } };
    }
  });
  parent.appendChild(details);
}

function renderForm(parent: HTMLElement, item: QueueItem): void {
  const form = el('div', 'override-form');
  WEIGHT_ORDER.forEach((key, index) => {
    const field = el('label', 'likert-field');
    field.appendChild(el('span', undefined, STATEMENT_LABELS[key]));
    const select = el('select');
    const blank = el('option', undefined, '·');
    blank.value = '';
    select.appendChild(blank);
    for (let value = 0; value <= LIKERT_MAX; value += 1) {
      const option = el('option', undefined, String(value));
      option.value = String(value);
      select.appendChild(option);
    }
    const current = state.draft.likert[index];
    select.value = current === null || current === undefined ? '' : String(current);
    select.addEventListener('change', () => {
      const parsed = select.value === '' ? null : Number(select.value);
      state = { ...state, draft: setLikert(state.draft, index, parsed) };
      render();
    });
    field.appendChild(select);
    form.appendChild(field);
  });

  const script = el('label', 'script-field');
  const checkbox = el('input');
  checkbox.type = 'checkbox';
  checkbox.checked = state.draft.scriptValid;
  checkbox.addEventListener('change', () => {
    state = { ...state, draft: { ...state.draft, scriptValid: checkbox.checked } };
    render();
  });
  script.appendChild(checkbox);
  script.appendChild(el('span', undefined, 'Response is in Bengali script (uncheck to zero all scores)'));
  form.appendChild(script);

  const note = el('textarea', 'note');
  note.placeholder = 'Annotator note (optional)';
  note.value = state.draft.note;
  note.addEventListener('input', () => {
    state = { ...state, draft: { ...state.draft, note: note.value } };
  });
  form.appendChild(note);

  const preview = previewScore(state.draft, state.progress?.weights ?? null);
  form.appendChild(
    el(
      'p',
      'preview',
      preview === null ? 'Preview score: set all five ratings' : `Preview score: ${formatScore(preview)}`,
    ),
  );

  const submitBtn = el('button', 'submit', state.submitting ? 'Submitting…' : 'Submit override');
  submitBtn.disabled = !canSubmit(state.draft, state.submitting);
  submitBtn.addEventListener('click', () => void submit());
  form.appendChild(submitBtn);
  parent.appendChild(form);
}

function render(): void {
  renderHeader();
  const root = document.getElementById('app');
  if (!root) return;
  root.replaceChildren();
  renderBanner(root);

  const layout = el('div', 'layout');
  const left = el('aside', 'left');
  renderList(left);
  layout.appendChild(left);

  const right = el('main', 'right');
  const item = selectedItem(state);
  if (item === null) {
    right.appendChild(el('p', 'hint', 'Select a queue item to review.'));
  } else {
    right.appendChild(el('h2', undefined, `${item.question_id} · ${item.dialect} · ${item.model_name}`));
    renderQuadruple(right, item);
    renderMachineVerdict(right, item);
    renderForm(right, item);
  }
  layout.appendChild(right);
  root.appendChild(layout);
}

void refreshQueue();
window.setInterval(() => void pollProgress(), POLL_INTERVAL_MS);
