// DOM rendering for the judge console: judgment panel, frontier gallery,
// trace timeline, toasts.  Pure functions of state into a container so the
// pieces are testable under jsdom.

import type { JudgmentPanel } from './judgment';
import type { TraceRecord } from './model';
import { summaryLine } from './model';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, cls?: string, text?: string): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderJudgmentPanel(container: HTMLElement, panel: JudgmentPanel,
                                    onSubmit: () => void): void {
  container.replaceChildren();
  if (!panel.composing || !panel.pending) {
    container.append(el('div', 'panel-idle', 'Waiting for the next candidate…'));
    return;
  }
  const pending = panel.pending;
  container.append(el('div', 'prompt-line',
                      `“${pending.prompt}” — ${pending.stage} stage`));

  const compare = el('div', 'compare');
  const entry = pending.frontier[panel.selectedEntry];
  const showCandidateOnly = pending.frontier.length === 0;

  const candBox = el('figure', 'compare-side candidate');
  const candImg = el('img');
  candImg.src = pending.candidate.image_url;
  candImg.alt = 'candidate';
  candBox.append(candImg, el('figcaption', 'caption',
                             `candidate · ${summaryLine(pending.candidate.features)}`));
  compare.append(candBox);

  if (!showCandidateOnly && entry) {
    const entryBox = el('figure', 'compare-side frontier-entry');
    const entryImg = el('img');
    entryImg.src = entry.image_url;
    entryImg.alt = entry.entry_id;
    entryBox.append(entryImg, el('figcaption', 'caption',
                                 `${entry.entry_id} · ${summaryLine(entry.features)}`));
    compare.append(entryBox);
    if (!panel.showCandidate) compare.classList.add('flipped');
    const judged = panel.pairwise.get(entry.entry_id);
    const marker = el('div', 'pairwise-state',
                      judged ? `winner: ${judged}` : '← candidate | entry →');
    compare.append(marker);
  }
  container.append(compare);

  const progress = el('div', 'pairwise-progress',
                      `pairwise ${panel.pairwise.size}/${pending.frontier.length}`);
  container.append(progress);

  const verdictRow = el('div', 'verdicts');
  for (const v of ['accept', 'refine', 'reject'] as const) {
    const b = el('button', `verdict ${v}` + (panel.verdict === v ? ' chosen' : ''),
                 `${v} (${v[0]!.toUpperCase()})`);
    b.dataset['verdict'] = v;
    verdictRow.append(b);
  }
  container.append(verdictRow);

  if (panel.hintPickerOpen) {
    const picker = el('div', 'hint-picker');
    picker.append(el('div', 'hint-title', 'refinement hints (pick at least one)'));
    for (const code of pending.allowed_hints) {
      const chosen = panel.hints.some((h) => h.code === code);
      const b = el('button', 'hint' + (chosen ? ' chosen' : ''), code);
      b.dataset['hint'] = code;
      picker.append(b);
    }
    container.append(picker);
  }

  const submit = el('button', 'submit', 'Submit judgment');
  const check = panel.validate();
  submit.disabled = !check.ok;
  if (!check.ok) submit.title = check.problems.join('; ');
  submit.addEventListener('click', onSubmit);
  container.append(submit);
}

export function renderGallery(container: HTMLElement,
                              frontier: Array<Record<string, unknown>>): void {
  container.replaceChildren();
  container.append(el('h2', undefined, `Frontier (${frontier.length})`));
  const row = el('div', 'gallery');
  for (const e of frontier) {
    const card = el('figure', 'gallery-card');
    const img = el('img');
    img.src = String(e['image_url'] ?? '');
    img.alt = String(e['entry_id'] ?? '');
    img.addEventListener('click', () => window.open(img.src, '_blank'));
    const feats = (e['features'] ?? {}) as Record<string, unknown>;
    card.append(img, el('figcaption', 'caption',
                        `${String(e['entry_id'])} · ${String(e['stage'] ?? '')} · ` +
                        summaryLine(feats)));
    const judgments = (e['judgments'] ?? []) as Array<{ winner?: string }>;
    if (judgments.length > 0) {
      const wins = judgments.filter((p) => p.winner === 'candidate').length;
      card.append(el('div', 'judgment-history',
                     `admission: won ${wins}/${judgments.length} pairwise`));
    }
    row.append(card);
  }
  container.append(row);
}

export function renderTimeline(container: HTMLElement, trace: TraceRecord[]): void {
  container.replaceChildren();
  container.append(el('h2', undefined, `Timeline (${trace.length} steps)`));
  const list = el('ol', 'timeline');
  for (const rec of trace) {
    const item = el('li', 'timeline-step');
    const verdict = rec.decision?.verdict ?? (rec.realization_failure ? 'failed' : '—');
    const badge = el('span', `badge ${verdict}`, verdict);
    item.append(el('span', 'step-no', `#${rec.step}`),
                el('span', 'stage', rec.stage), badge);
    if (rec.image_hash) {
      const a = el('a', 'image-link', rec.entry_id ?? rec.image_hash.slice(0, 8));
      a.setAttribute('href', `/images/${rec.image_hash}.png`);
      a.setAttribute('target', '_blank');
      item.append(a);
    }
    if (rec.realization_failure) {
      item.append(el('span', 'failure', rec.realization_failure));
    }
    list.append(item);
  }
  container.append(list);
}

export function showToast(container: HTMLElement, message: string,
                          kind: 'info' | 'error' = 'info'): void {
  const toast = el('div', `toast ${kind}`, message);
  container.append(toast);
  setTimeout(() => toast.remove(), 4000);
}

export function setOfflineBanner(container: HTMLElement, offline: boolean): void {
  let banner = container.querySelector<HTMLElement>('.offline-banner');
  if (offline && !banner) {
    banner = el('div', 'offline-banner', 'Connection lost — retrying…');
    container.prepend(banner);
  } else if (!offline && banner) {
    banner.remove();
  }
}
