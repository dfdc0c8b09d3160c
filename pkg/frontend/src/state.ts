// UI state and pure transition helpers, kept free of DOM access so the
// submission rules are unit-testable.

import { computeFinalScore, validateLikert } from './score.js';
import type { Progress, QueueItem, StatusFilter, Weights } from './types.js';

export interface Banner {
  kind: 'error' | 'conflict' | 'info';
  message: string;
}

export interface Draft {
  likert: Array<number | null>;
  scriptValid: boolean;
  note: string;
  viewedMachineReasoning: boolean;
}

export interface AppState {
  items: QueueItem[];
  statusFilter: StatusFilter;
  selectedRef: string | null;
  draft: Draft;
  progress: Progress | null;
  banner: Banner | null;
  submitting: boolean;
}

export function emptyDraft(): Draft {
  return {
    likert: [null, null, null, null, null],
    scriptValid: true,
    note: '',
    viewedMachineReasoning: false,
  };
}

export function initialState(): AppState {
  return {
    items: [],
    statusFilter: 'pending',
    selectedRef: null,
    draft: emptyDraft(),
    progress: null,
    banner: null,
    submitting: false,
  };
}

export function selectedItem(state: AppState): QueueItem | null {
  return state.items.find((item) => item.verdict_ref === state.selectedRef) ?? null;
}

/** Submission unlocks only when all five Likert values are set and valid. */
export function canSubmit(draft: Draft, submitting: boolean): boolean {
  return !submitting && validateLikert(draft.likert).length === 0;
}

/** Preview of the stored score; null until the draft is complete. */
export function previewScore(draft: Draft, weights: Weights | null): number | null {
  if (weights === null || validateLikert(draft.likert).length > 0) {
    return null;
  }
  if (!draft.scriptValid) {
    return 0; // script gate: the service zeroes everything
  }
  return computeFinalScore(draft.likert as number[], weights);
}

export function setLikert(draft: Draft, index: number, value: number | null): Draft {
  const likert = draft.likert.slice();
  likert[index] = value;
  return { ...draft, likert };
}

/** Select an item, resetting the draft; selecting null clears the pane. */
export function selectItem(state: AppState, ref: string | null): AppState {
  return { ...state, selectedRef: ref, draft: emptyDraft(), banner: null };
}

/** Remove a resolved item from the pending list and clear its selection. */
export function removeResolved(state: AppState, ref: string): AppState {
  const items = state.items.filter((item) => item.verdict_ref !== ref);
  return {
    ...state,
    items,
    selectedRef: state.selectedRef === ref ? null : state.selectedRef,
    draft: state.selectedRef === ref ? emptyDraft() : state.draft,
  };
}
