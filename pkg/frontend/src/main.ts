// Console bootstrap: session selection, 1 Hz polling, keyboard judging.

import { ApiError, SessionApi } from './api';
import { JudgmentPanel } from './judgment';
import { PendingPoller } from './poller';
import {
  renderGallery, renderJudgmentPanel, renderTimeline, setOfflineBanner, showToast,
} from './ui';

const api = new SessionApi('');
const panel = new JudgmentPanel();

const root = document.getElementById('app')!;
const panelHost = document.getElementById('judgment')!;
const galleryHost = document.getElementById('gallery')!;
const timelineHost = document.getElementById('timeline')!;
const toastHost = document.getElementById('toasts')!;
const statusHost = document.getElementById('session-status')!;

let sessionId = new URLSearchParams(window.location.search).get('session') ?? '';
let poller: PendingPoller | null = null;

function repaint(): void {
  renderJudgmentPanel(panelHost, panel, () => void submit());
}

async function refreshReadViews(): Promise<void> {
  if (!sessionId) return;
  try {
    const [info, frontier, trace] = await Promise.all([
      api.session(sessionId), api.frontier(sessionId), api.trace(sessionId)]);
    statusHost.textContent =
      `session ${info.id} · ${info.status} · ${info.stage} · step ${info.step}`;
    renderGallery(galleryHost, frontier.frontier);
    renderTimeline(timelineHost, trace);
  } catch (err) {
    if (err instanceof ApiError && err.status === 404) {
      showToast(toastHost, `session ${sessionId} not found`, 'error');
    }
  }
}

async function submit(): Promise<void> {
  if (!panel.canSubmit() || !sessionId) return;
  const judgment = panel.buildJudgment();
  panel.markSubmitting();
  repaint();
  try {
    await api.submitJudgment(sessionId, judgment);
    panel.reset();
    poller?.resume();
  } catch (err) {
    if (err instanceof ApiError && (err.status === 409 || err.status === 404)) {
      showToast(toastHost, `judgment rejected: ${err.message}`, 'error');
      panel.reset();
      poller?.resume();
    } else {
      showToast(toastHost, 'submit failed — will retry on next input', 'error');
      panel.phase = 'composing';
    }
  }
  repaint();
  void refreshReadViews();
}

function attachSession(id: string): void {
  sessionId = id;
  poller?.stop();
  poller = new PendingPoller(api, id, {
    onPending: (pending) => {
      panel.beginComposing(pending);
      repaint();
    },
    onIdle: () => void refreshReadViews(),
    onOffline: () => setOfflineBanner(root, true),
    onOnline: () => setOfflineBanner(root, false),
  });
  poller.start();
  void refreshReadViews();
}

document.addEventListener('keydown', (ev) => {
  if (ev.target instanceof HTMLInputElement || ev.target instanceof HTMLTextAreaElement) {
    return;
  }
  if (panel.handleKey(ev.key)) {
    ev.preventDefault();
    repaint();
  }
});

document.getElementById('session-form')?.addEventListener('submit', (ev) => {
  ev.preventDefault();
  const input = document.getElementById('session-id') as HTMLInputElement | null;
  if (input && input.value.trim()) attachSession(input.value.trim());
});

panelHost.addEventListener('click', (ev) => {
  const target = ev.target as HTMLElement;
  const verdict = target.dataset['verdict'];
  if (verdict === 'accept' || verdict === 'refine' || verdict === 'reject') {
    panel.setVerdict(verdict);
    repaint();
  }
  const hint = target.dataset['hint'];
  if (hint) {
    panel.toggleHint(hint as never);
    repaint();
  }
});

if (sessionId) attachSession(sessionId);
repaint();
