import { describe, expect, it } from 'vitest';

import { computeFinalScore, formatScore, scaleMax, validateLikert } from '../src/score.js';
import type { Weights } from '../src/types.js';

const WEIGHTS: Weights = {
  comprehension: 3.0,
  factual: 2.5,
  completeness: 2.0,
  clarity: 1.5,
  length: 1.0,
};

describe('computeFinalScore', () => {
  it('hits the scale maximum on all-5s', () => {
    expect(computeFinalScore([5, 5, 5, 5, 5], WEIGHTS)).toBe(10);
  });

  it('is zero on all-0s', () => {
    expect(computeFinalScore([0, 0, 0, 0, 0], WEIGHTS)).toBe(0);
  });

  it('matches the hand-computed mixed example', () => {
    // 3.0*1 + 2.5*0.8 + 2.0*0.6 + 1.5*0.4 + 1.0*0.2 = 7.0
    expect(computeFinalScore([5, 4, 3, 2, 1], WEIGHTS)).toBeCloseTo(7.0, 12);
  });

  it('respects served weights rather than assuming defaults', () => {
    const doubled: Weights = {
      comprehension: 6,
      factual: 5,
      completeness: 4,
      clarity: 3,
      length: 2,
    };
    expect(computeFinalScore([5, 4, 3, 2, 1], doubled)).toBeCloseTo(14.0, 12);
    expect(scaleMax(doubled)).toBe(20);
  });

  it('rejects the wrong number of values', () => {
    expect(() => computeFinalScore([5, 5, 5], WEIGHTS)).toThrow();
  });
});

describe('validateLikert', () => {
  it('accepts a complete valid vector', () => {
    expect(validateLikert([0, 1, 2, 3, 5])).toEqual([]);
  });

  it('reports unset values', () => {
    const problems = validateLikert([5, null, 3, null, 1]);
    expect(problems).toHaveLength(2);
    expect(problems[0]).toMatch(/not set/);
  });

  it('rejects out-of-range and fractional values', () => {
    expect(validateLikert([6, 1, 1, 1, 1])).toHaveLength(1);
    expect(validateLikert([1.5, 1, 1, 1, 1])).toHaveLength(1);
    expect(validateLikert([-1, 1, 1, 1, 1])).toHaveLength(1);
  });
});

describe('formatScore', () => {
  it('trims float noise', () => {
    expect(formatScore(7)).toBe('7');
    expect(formatScore(7.5)).toBe('7.5');
    expect(formatScore(0.47)).toBe('0.47');
  });
});
