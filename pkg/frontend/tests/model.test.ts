import { describe, expect, it } from 'vitest';

import type { Judgment, PendingView } from '../src/model';
import { summaryLine, validateJudgment } from '../src/model';

const pending: PendingView = {
  token: 'tok-1',
  prompt: 'melancholy by the window',
  stage: 'lighting',
  candidate: { features: {}, image_url: '/images/c.png' },
  candidate_image_hash: 'c',
  frontier: [
    { entry_id: 's001', features: {}, image_hash: 'a', image_url: '/images/a.png' },
    { entry_id: 's004', features: {}, image_hash: 'b', image_url: '/images/b.png' },
  ],
  allowed_hints: ['fill-up', 'fill-down', 'exposure-up', 'try-other-preset'],
};

function judgment(partial: Partial<Judgment>): Judgment {
  return {
    token: 'tok-1',
    verdict: 'accept',
    pairwise: [
      { entry_id: 's001', winner: 'candidate' },
      { entry_id: 's004', winner: 'entry' },
    ],
    hints: [],
    rationale: '',
    ...partial,
  };
}

describe('validateJudgment', () => {
  it('accepts a complete accept judgment', () => {
    expect(validateJudgment(judgment({}), pending).ok).toBe(true);
  });

  it('requires a pairwise outcome for every frontier entry', () => {
    const res = validateJudgment(
      judgment({ pairwise: [{ entry_id: 's001', winner: 'candidate' }] }), pending);
    expect(res.ok).toBe(false);
    expect(res.problems.join(' ')).toContain('s004');
  });

  it('blocks refine without hints', () => {
    const res = validateJudgment(judgment({ verdict: 'refine' }), pending);
    expect(res.ok).toBe(false);
    expect(res.problems.join(' ')).toContain('refine');
  });

  it('allows refine with a hint from the allowed set', () => {
    const res = validateJudgment(
      judgment({ verdict: 'refine',
                 hints: [{ code: 'fill-up', magnitude: 'small', rationale: '' }] }),
      pending);
    expect(res.ok).toBe(true);
  });

  it('rejects hints outside the stage-allowed set', () => {
    const res = validateJudgment(
      judgment({ verdict: 'refine',
                 hints: [{ code: 'move-camera-left', magnitude: 'small', rationale: '' }] }),
      pending);
    expect(res.ok).toBe(false);
    expect(res.problems.join(' ')).toContain('move-camera-left');
  });

  it('rejects unknown hint codes and bad magnitudes', () => {
    const res = validateJudgment(
      judgment({
        verdict: 'refine',
        hints: [{ code: 'paint-it-red' as never, magnitude: 'huge' as never, rationale: '' }],
      }), pending);
    expect(res.ok).toBe(false);
  });

  it('rejects token mismatches', () => {
    const res = validateJudgment(judgment({ token: 'stale' }), pending);
    expect(res.ok).toBe(false);
  });

  it('rejects outcomes for unknown entries', () => {
    const res = validateJudgment(
      judgment({ pairwise: [...judgment({}).pairwise,
                            { entry_id: 'ghost', winner: 'entry' }] }), pending);
    expect(res.ok).toBe(false);
  });
});

describe('summaryLine', () => {
  it('formats the camera/light numbers the judge needs', () => {
    const line = summaryLine({ ev_face: 1.23, v_exp: 2.5, key_fill_achieved: 3.97,
                               delta: -0.5, visibility_face: 0.92 });
    expect(line).toContain('face EV 1.2');
    expect(line).toContain('key:fill 4.0:1');
    expect(line).toContain('Δ -0.50');
    expect(line).toContain('92%');
  });

  it('stays quiet for empty features', () => {
    expect(summaryLine({})).toBe('');
  });
});
