// Judgment composition state machine.  One pending judgment at a time;
// inputs stay disabled while a POST is in flight or nothing is pending.

import type { Hint, HintCode, Judgment, PendingView, Verdict, Winner } from './model';
import { validateJudgment } from './model';

export type PanelPhase = 'idle' | 'composing' | 'submitting';

export class JudgmentPanel {
  phase: PanelPhase = 'idle';
  pending: PendingView | null = null;
  pairwise = new Map<string, Winner>();
  verdict: Verdict | null = null;
  hints: Hint[] = [];
  rationale = '';
  selectedEntry = 0;          // which frontier entry is compared side-by-side
  showCandidate = true;       // flip/blink toggle state
  hintPickerOpen = false;

  beginComposing(pending: PendingView): void {
    this.pending = pending;
    this.phase = 'composing';
    this.pairwise = new Map();
    this.verdict = null;
    this.hints = [];
    this.rationale = '';
    this.selectedEntry = 0;
    this.showCandidate = true;
    this.hintPickerOpen = false;
  }

  reset(): void {
    this.phase = 'idle';
    this.pending = null;
    this.pairwise.clear();
    this.verdict = null;
    this.hints = [];
    this.hintPickerOpen = false;
  }

  get composing(): boolean {
    return this.phase === 'composing' && this.pending !== null;
  }

  currentEntryId(): string | null {
    const f = this.pending?.frontier ?? [];
    const entry = f[this.selectedEntry];
    return entry ? entry.entry_id : null;
  }

  cycleEntry(delta: number): void {
    const n = this.pending?.frontier.length ?? 0;
    if (n > 0) this.selectedEntry = (this.selectedEntry + delta + n) % n;
  }

  flip(): void {
    this.showCandidate = !this.showCandidate;
  }

  pickWinner(winner: Winner): void {
    const id = this.currentEntryId();
    if (!this.composing || id === null) return;
    this.pairwise.set(id, winner);
    // auto-advance to the next unjudged entry, if any
    const f = this.pending!.frontier;
    for (let k = 1; k <= f.length; k++) {
      const idx = (this.selectedEntry + k) % f.length;
      if (!this.pairwise.has(f[idx]!.entry_id)) {
        this.selectedEntry = idx;
        return;
      }
    }
  }

  setVerdict(v: Verdict): void {
    if (!this.composing) return;
    this.verdict = v;
    this.hintPickerOpen = v === 'refine';
  }

  toggleHint(code: HintCode, magnitude: 'small' | 'large' = 'small'): void {
    const at = this.hints.findIndex((h) => h.code === code);
    if (at >= 0) this.hints.splice(at, 1);
    else this.hints.push({ code, magnitude, rationale: '' });
  }

  pairwiseComplete(): boolean {
    const f = this.pending?.frontier ?? [];
    return f.every((e) => this.pairwise.has(e.entry_id));
  }

  /** Submit stays disabled until this returns with ok=true. */
  validate(): { ok: boolean; problems: string[] } {
    if (!this.composing || this.verdict === null) {
      return { ok: false, problems: ['no verdict chosen'] };
    }
    return validateJudgment(this.buildJudgment(), this.pending!);
  }

  canSubmit(): boolean {
    return this.validate().ok;
  }

  buildJudgment(): Judgment {
    return {
      token: this.pending?.token ?? '',
      verdict: this.verdict ?? 'reject',
      pairwise: Array.from(this.pairwise, ([entry_id, winner]) => ({ entry_id, winner })),
      hints: this.hints,
      rationale: this.rationale,
    };
  }

  markSubmitting(): void {
    this.phase = 'submitting';
  }

  /** Keyboard contract: arrows pick the pairwise winner, A/R/X verdicts. */
  handleKey(key: string): boolean {
    if (!this.composing) return false;
    switch (key) {
      case 'ArrowLeft':
        this.pickWinner('candidate');
        return true;
      case 'ArrowRight':
        this.pickWinner('entry');
        return true;
      case 'ArrowUp':
        this.cycleEntry(-1);
        return true;
      case 'ArrowDown':
        this.cycleEntry(1);
        return true;
      case 'f':
      case 'F':
        this.flip();
        return true;
      case 'a':
      case 'A':
        this.setVerdict('accept');
        return true;
      case 'r':
      case 'R':
        this.setVerdict('refine');
        return true;
      case 'x':
      case 'X':
        this.setVerdict('reject');
        return true;
      default:
        return false;
    }
  }
}
