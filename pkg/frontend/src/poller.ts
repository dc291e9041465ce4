// 1 Hz pending-judgment poller.  Pauses while a judgment is being composed
// and backs off behind a retry banner when the service is unreachable.

import type { SessionApi } from './api';
import type { PendingView } from './model';

export interface PollerEvents {
  onPending: (pending: PendingView) => void;
  onIdle?: () => void;
  onOffline?: (failures: number) => void;
  onOnline?: () => void;
}

export class PendingPoller {
  intervalMs = 1000;
  paused = false;
  failures = 0;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private api: SessionApi,
    private sessionId: string,
    private events: PollerEvents,
  ) {}

  start(): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => void this.tick(), this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  async tick(): Promise<void> {
    if (this.paused) return;
    try {
      const pending = await this.api.pending(this.sessionId);
      if (this.failures > 0) {
        this.failures = 0;
        this.events.onOnline?.();
      }
      if (pending) {
        this.paused = true;        // composing; resume after submit
        this.events.onPending(pending);
      } else {
        this.events.onIdle?.();
      }
    } catch {
      this.failures += 1;
      this.events.onOffline?.(this.failures);
    }
  }

  resume(): void {
    this.paused = false;
  }
}
