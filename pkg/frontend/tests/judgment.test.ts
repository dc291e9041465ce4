import { beforeEach, describe, expect, it } from 'vitest';

import { JudgmentPanel } from '../src/judgment';
import type { PendingView } from '../src/model';

function pendingWith(entries: number): PendingView {
  return {
    token: 't',
    prompt: 'p',
    stage: 'composition',
    candidate: { features: {}, image_url: '/images/c.png' },
    candidate_image_hash: 'c',
    frontier: Array.from({ length: entries }, (_, k) => ({
      entry_id: `e${k}`, features: {}, image_hash: `h${k}`,
      image_url: `/images/h${k}.png`,
    })),
    allowed_hints: ['move-camera-left', 'camera-farther', 'lens-wider'],
  };
}

describe('JudgmentPanel', () => {
  let panel: JudgmentPanel;

  beforeEach(() => {
    panel = new JudgmentPanel();
  });

  it('keyboard accept produces a complete pairwise payload', () => {
    panel.beginComposing(pendingWith(2));
    panel.handleKey('ArrowLeft');   // candidate beats e0, auto-advance to e1
    panel.handleKey('ArrowRight');  // e1 beats candidate
    panel.handleKey('a');
    expect(panel.verdict).toBe('accept');
    expect(panel.canSubmit()).toBe(true);
    const j = panel.buildJudgment();
    expect(j.pairwise).toHaveLength(2);
    expect(j.pairwise.find((p) => p.entry_id === 'e0')?.winner).toBe('candidate');
    expect(j.pairwise.find((p) => p.entry_id === 'e1')?.winner).toBe('entry');
  });

  it('submit stays disabled until pairwise is complete', () => {
    panel.beginComposing(pendingWith(2));
    panel.handleKey('a');
    expect(panel.canSubmit()).toBe(false);
    panel.pickWinner('candidate');
    expect(panel.canSubmit()).toBe(false);
    panel.pickWinner('entry');
    expect(panel.canSubmit()).toBe(true);
  });

  it('refine without hint selection keeps submit disabled', () => {
    panel.beginComposing(pendingWith(0));
    panel.handleKey('r');
    expect(panel.hintPickerOpen).toBe(true);
    expect(panel.canSubmit()).toBe(false);
    panel.toggleHint('camera-farther');
    expect(panel.canSubmit()).toBe(true);
    panel.toggleHint('camera-farther');   // toggling off disables again
    expect(panel.canSubmit()).toBe(false);
  });

  it('empty frontier accept is immediately valid', () => {
    panel.beginComposing(pendingWith(0));
    panel.handleKey('a');
    expect(panel.canSubmit()).toBe(true);
    expect(panel.buildJudgment().pairwise).toHaveLength(0);
  });

  it('flip and entry cycling only touch presentation state', () => {
    panel.beginComposing(pendingWith(3));
    panel.handleKey('f');
    expect(panel.showCandidate).toBe(false);
    panel.handleKey('ArrowDown');
    expect(panel.selectedEntry).toBe(1);
    panel.handleKey('ArrowUp');
    expect(panel.selectedEntry).toBe(0);
    expect(panel.pairwise.size).toBe(0);
  });

  it('keys are inert while idle or submitting', () => {
    expect(panel.handleKey('a')).toBe(false);
    panel.beginComposing(pendingWith(1));
    panel.markSubmitting();
    expect(panel.handleKey('a')).toBe(false);
  });

  it('x rejects without needing hints', () => {
    panel.beginComposing(pendingWith(1));
    panel.pickWinner('entry');
    panel.handleKey('x');
    expect(panel.verdict).toBe('reject');
    expect(panel.canSubmit()).toBe(true);
  });
});
