// In-memory twin of the session service for frontend tests: same endpoints,
// same status codes, driven entirely through a fetch-compatible function.

import type { PendingView } from '../src/model';

interface Step {
  stage: string;
  entry_id: string;
  image_hash: string;
}

export class FakeService {
  steps: Step[] = [
    { stage: 'staging', entry_id: 's001', image_hash: 'img1' },
    { stage: 'composition', entry_id: 's002', image_hash: 'img2' },
    { stage: 'lighting', entry_id: 's003', image_hash: 'img3' },
  ];
  cursor = 0;
  token = '';
  pendingOpen = false;
  trace: Array<Record<string, unknown>> = [];
  frontier: Array<Record<string, unknown>> = [];
  status = 'planning';
  submissions: Array<Record<string, unknown>> = [];

  fetch = async (input: string, init?: RequestInit): Promise<Response> => {
    const url = new URL(input, 'http://fake');
    const path = url.pathname;
    const method = init?.method ?? 'GET';
    if (path === '/sessions/s1/pending' && method === 'GET') {
      if (this.cursor >= this.steps.length) {
        this.status = 'done';
        return new Response(null, { status: 204 });
      }
      const step = this.steps[this.cursor]!;
      this.pendingOpen = true;
      this.token = `tok-${this.cursor}`;
      const pending: PendingView = {
        token: this.token,
        prompt: 'test prompt',
        stage: step.stage,
        candidate: { entry_id: step.entry_id, features: { v_exp: 1.0 },
                     image_url: `/images/${step.image_hash}.png` },
        candidate_image_hash: step.image_hash,
        frontier: this.frontier.map((e, i) => ({
          entry_id: String(e['entry_id']), features: {},
          image_hash: `f${i}`, image_url: `/images/f${i}.png`,
        })),
        allowed_hints: ['exposure-up', 'fill-up', 'try-other-preset'] as never,
      };
      return Response.json(pending);
    }
    if (path === '/sessions/s1/judgments' && method === 'POST') {
      const body = JSON.parse(String(init?.body)) as Record<string, unknown>;
      if (!this.pendingOpen || body['token'] !== this.token) {
        return Response.json({ detail: 'no matching pending judgment' }, { status: 409 });
      }
      if (!['accept', 'refine', 'reject'].includes(String(body['verdict']))) {
        return Response.json({ detail: 'verdict: invalid value' }, { status: 400 });
      }
      this.pendingOpen = false;
      this.submissions.push(body);
      const step = this.steps[this.cursor]!;
      this.trace.push({
        step: this.cursor + 1, stage: step.stage, entry_id: step.entry_id,
        image_hash: step.image_hash,
        decision: { verdict: body['verdict'], hints: body['hints'] ?? [] },
        frontier: [step.entry_id], best: step.entry_id,
      });
      if (body['verdict'] === 'accept') {
        this.frontier = [{ entry_id: step.entry_id, stage: step.stage,
                           features: {}, image_hash: step.image_hash,
                           image_url: `/images/${step.image_hash}.png` }];
      }
      this.cursor += 1;
      if (this.cursor >= this.steps.length) this.status = 'done';
      return Response.json({ accepted: true }, { status: 202 });
    }
    if (path === '/sessions/s1/trace') {
      const text = this.trace.map((r) => JSON.stringify(r)).join('\n');
      return new Response(text, { status: 200 });
    }
    if (path === '/sessions/s1/frontier') {
      return Response.json({ frontier: this.frontier });
    }
    if (path === '/sessions/s1') {
      return Response.json({ id: 's1', status: this.status,
                             stage: this.steps[Math.min(this.cursor, 2)]!.stage,
                             step: this.cursor, prompt: 'test prompt', scene: 'x' });
    }
    return Response.json({ detail: 'not found' }, { status: 404 });
  };
}
