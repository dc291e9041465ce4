import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';

import { SessionApi } from '../src/api';
import { PendingPoller } from '../src/poller';
import { FakeService } from './fake_service';

describe('PendingPoller', () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it('polls at 1 Hz and pauses while composing', async () => {
    const service = new FakeService();
    const api = new SessionApi('', service.fetch);
    const seen: string[] = [];
    const poller = new PendingPoller(api, 's1', {
      onPending: (p) => seen.push(p.token),
    });
    poller.start();
    await vi.advanceTimersByTimeAsync(1000);
    expect(seen).toEqual(['tok-0']);
    // paused: further ticks do not re-deliver
    await vi.advanceTimersByTimeAsync(3000);
    expect(seen).toEqual(['tok-0']);
    poller.stop();
  });

  it('raises the offline banner on failures and clears it on recovery', async () => {
    let failing = true;
    const service = new FakeService();
    const flaky = async (input: string, init?: RequestInit) => {
      if (failing) throw new TypeError('network down');
      return service.fetch(input, init);
    };
    const api = new SessionApi('', flaky);
    const events: string[] = [];
    const poller = new PendingPoller(api, 's1', {
      onPending: () => events.push('pending'),
      onOffline: (n) => events.push(`offline${n}`),
      onOnline: () => events.push('online'),
    });
    poller.start();
    await vi.advanceTimersByTimeAsync(2000);
    expect(events).toEqual(['offline1', 'offline2']);
    failing = false;
    await vi.advanceTimersByTimeAsync(1000);
    expect(events).toEqual(['offline1', 'offline2', 'online', 'pending']);
    poller.stop();
  });
});
