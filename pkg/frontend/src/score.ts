// Weighted-Likert score preview. The weights always come from the service
// (/api/progress) so the preview can never drift from the stored score.

import type { Weights } from './types.js';

export const LIKERT_MAX = 5;

export const WEIGHT_ORDER = [
  'comprehension',
  'factual',
  'completeness',
  'clarity',
  'length',
] as const;

export const STATEMENT_LABELS: Record<(typeof WEIGHT_ORDER)[number], string> = {
  comprehension: 'Dialect comprehension',
  factual: 'Factual correctness',
  completeness: 'Content completeness',
  clarity: 'Response clarity',
  length: 'Appropriate length',
};

/** sum(weight_i * likert_i / 5); likert order matches WEIGHT_ORDER. */
export function computeFinalScore(likert: readonly number[], weights: Weights): number {
  if (likert.length !== WEIGHT_ORDER.length) {
    throw new Error(`expected ${WEIGHT_ORDER.length} Likert values, got ${likert.length}`);
  }
  let total = 0;
  WEIGHT_ORDER.forEach((key, i) => {
    total += weights[key] * (likert[i]! / LIKERT_MAX);
  });
  return total;
}

export function scaleMax(weights: Weights): number {
  return WEIGHT_ORDER.reduce((sum, key) => sum + weights[key], 0);
}

export function formatScore(value: number): string {
  // trim float noise but keep meaningful decimals (7 -> "7", 7.05 -> "7.05")
  return value.toFixed(2).replace(/\.?0+$/, '');
}

export function isValidLikert(value: unknown): value is number {
  return typeof value === 'number' && Number.isInteger(value) && value >= 0 && value <= LIKERT_MAX;
}

/** Human-readable problems blocking submission; empty array means valid. */
export function validateLikert(values: ReadonlyArray<number | null>): string[] {
  const problems: string[] = [];
  if (values.length !== WEIGHT_ORDER.length) {
    problems.push(`expected ${WEIGHT_ORDER.length} Likert values`);
    return problems;
  }
  values.forEach((value, i) => {
    if (value === null) {
      problems.push(`${STATEMENT_LABELS[WEIGHT_ORDER[i]!]}: not set`);
    } else if (!isValidLikert(value)) {
      problems.push(`${STATEMENT_LABELS[WEIGHT_ORDER[i]!]}: must be an integer 0-${LIKERT_MAX}`);
    }
  });
  return problems;
}
