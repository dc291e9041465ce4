// Shared types mirroring the session-api/1 wire schemas, plus the
// client-side validation that keeps every submitted judgment schema-valid.

export const HINT_CODES = [
  'move-camera-left', 'move-camera-right', 'move-camera-up', 'move-camera-down',
  'camera-closer', 'camera-farther', 'lens-wider', 'lens-tighter',
  'exposure-up', 'exposure-down',
  'key-brighter', 'key-dimmer', 'key-larger', 'key-smaller',
  'fill-up', 'fill-down', 'add-negative-fill',
  'rotate-subject', 'change-pose', 'change-anchor', 'try-other-preset',
] as const;

export type HintCode = (typeof HINT_CODES)[number];
export type Verdict = 'accept' | 'refine' | 'reject';
export type Winner = 'candidate' | 'entry';

export interface EntrySummary {
  entry_id: string;
  features: Record<string, unknown>;
  image_hash: string;
  image_url: string;
}

export interface PendingView {
  token: string;
  prompt: string;
  stage: string;
  candidate: { entry_id?: string; features: Record<string, unknown>; image_url: string };
  candidate_image_hash: string;
  frontier: EntrySummary[];
  allowed_hints: HintCode[];
}

export interface PairOutcome {
  entry_id: string;
  winner: Winner;
}

export interface Hint {
  code: HintCode;
  magnitude: 'small' | 'large';
  rationale: string;
}

export interface Judgment {
  token: string;
  verdict: Verdict;
  pairwise: PairOutcome[];
  hints: Hint[];
  rationale: string;
}

export interface SessionInfo {
  id: string;
  status: string;
  stage: string;
  step: number;
  prompt: string;
  scene: string;
  error?: string;
}

export interface TraceRecord {
  step: number;
  stage: string;
  entry_id?: string;
  image_hash?: string;
  decision?: { verdict: Verdict; hints: Hint[]; rationale?: string };
  realization_failure?: string;
  frontier: string[];
  best: string | null;
}

export interface ValidationResult {
  ok: boolean;
  problems: string[];
}

/** Mirrors the server-side checks: a judgment failing here would be a 400. */
export function validateJudgment(j: Judgment, pending: PendingView): ValidationResult {
  const problems: string[] = [];
  if (!j.token || j.token !== pending.token) {
    problems.push('token does not match the pending judgment');
  }
  if (!['accept', 'refine', 'reject'].includes(j.verdict)) {
    problems.push(`verdict ${String(j.verdict)} is not accept|refine|reject`);
  }
  const need = new Set(pending.frontier.map((e) => e.entry_id));
  const have = new Set(j.pairwise.map((p) => p.entry_id));
  for (const id of need) {
    if (!have.has(id)) problems.push(`missing pairwise outcome for ${id}`);
  }
  for (const p of j.pairwise) {
    if (p.winner !== 'candidate' && p.winner !== 'entry') {
      problems.push(`pairwise winner for ${p.entry_id} must be candidate|entry`);
    }
    if (!need.has(p.entry_id)) problems.push(`pairwise outcome for unknown ${p.entry_id}`);
  }
  if (j.verdict === 'refine' && j.hints.length === 0) {
    problems.push('refine requires at least one hint');
  }
  const allowed = new Set<string>(pending.allowed_hints);
  for (const h of j.hints) {
    if (!(HINT_CODES as readonly string[]).includes(h.code)) {
      problems.push(`unknown hint code ${h.code}`);
    } else if (allowed.size > 0 && !allowed.has(h.code)) {
      problems.push(`hint ${h.code} is not allowed in stage ${pending.stage}`);
    }
    if (h.magnitude !== 'small' && h.magnitude !== 'large') {
      problems.push(`hint magnitude must be small|large`);
    }
  }
  return { ok: problems.length === 0, problems };
}

/** Compact camera/light summary line shown under each image. */
export function summaryLine(features: Record<string, unknown>): string {
  const parts: string[] = [];
  const f = features as Record<string, number | undefined>;
  if (typeof f['ev_face'] === 'number') parts.push(`face EV ${f['ev_face']!.toFixed(1)}`);
  if (typeof f['v_exp'] === 'number') parts.push(`V_exp ${f['v_exp']!.toFixed(2)}`);
  const kf = f['key_fill_achieved'];
  if (typeof kf === 'number') parts.push(`key:fill ${kf.toFixed(1)}:1`);
  if (typeof f['delta'] === 'number') parts.push(`Δ ${f['delta']!.toFixed(2)}`);
  const vis = f['visibility_face'];
  if (typeof vis === 'number') parts.push(`face vis ${(vis * 100).toFixed(0)}%`);
  return parts.join(' · ');
}
